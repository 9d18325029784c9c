import csv

import pytest

from app.config.settings import reload_settings
from app.main import cli

SIMULATION = """
[simulation]
n_paths = {n_paths}
dt = {dt}
horizon = {horizon}
seed = {seed}
antithetic = true
probe_y = 1.0
transversality_horizons = 10, 40, 160
"""

SIMULATION_CHECKS = {
    "mc_labor_value",
    "mc_labor_value_half_step",
    "mc_budget_zero",
    "mc_budget_x_R",
    "mc_martingale_T1",
    "mc_martingale_T10",
    "mc_transversality",
}


@pytest.fixture
def simulation_settings(monkeypatch):
    """Small path blocks so every run spans several seeded substreams."""

    def _apply(threads: int, block_size: int) -> None:
        monkeypatch.setenv("DUALLIFE_THREADS", str(threads))
        monkeypatch.setenv("MC_BLOCK_SIZE", str(block_size))
        reload_settings()

    yield _apply
    reload_settings()


def read_statuses(path) -> dict:
    with open(path, newline="", encoding="utf-8") as handle:
        return {row["name"]: row["status"] for row in csv.DictReader(handle)}


def test_solve_writes_outputs(runner, write_scenario, tmp_path):
    """Test solve writes the summary, solution and policy table"""
    out = tmp_path / "out"

    result = runner.invoke(cli, ["solve", str(write_scenario()), "-o", str(out)])

    assert result.exit_code == 0, result.output
    assert "z_R" in result.output
    assert sorted(p.name for p in out.iterdir()) == [
        "policy_table.csv",
        "solution.csv",
        "summary.txt",
    ]
    policy_lines = (out / "policy_table.csv").read_text().splitlines()
    assert policy_lines[0] == "y,X,c,pi,P,human_wealth,J"
    assert len(policy_lines) == 22
    solution_lines = (out / "solution.csv").read_text().splitlines()[1:]
    solution = dict(line.split(",", 1) for line in solution_lines)
    assert abs(float(solution["z_R"]) - 0.136922) < 1e-6
    assert solution["assumptions_passed"] == "true"


def test_solve_reruns_are_byte_identical(runner, write_scenario, tmp_path):
    """Test two solve runs of one scenario write identical files"""
    # Arrange
    path = write_scenario()
    first, second = tmp_path / "first", tmp_path / "second"

    # Act
    for out in (first, second):
        result = runner.invoke(cli, ["solve", str(path), "-o", str(out)])
        assert result.exit_code == 0, result.output

    # Assert
    for name in ("solution.csv", "policy_table.csv", "summary.txt"):
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


def test_solve_identical_preferences_exit_two(
    runner, write_scenario, ref1_ini, tmp_path
):
    """Test l = 0, k = 1 exits with the assumption violation code"""
    path = write_scenario(ref1_ini.replace("l = 0.5", "l = 0"))

    result = runner.invoke(cli, ["solve", str(path), "-o", str(tmp_path / "out")])

    assert result.exit_code == 2
    assert "(k-1)^2 + l^2" in result.output
    assert not (tmp_path / "out").exists()


def test_solve_zero_sigma_exit_one(runner, write_scenario, ref1_ini, tmp_path):
    """Test sigma = 0 is a configuration error"""
    path = write_scenario(ref1_ini.replace("sigma = 0.20", "sigma = 0"))

    result = runner.invoke(cli, ["solve", str(path), "-o", str(tmp_path)])

    assert result.exit_code == 1
    assert "[market] sigma" in result.output


def test_solve_missing_file_exit_one(runner, tmp_path):
    """Test an unreadable scenario is a configuration error"""
    result = runner.invoke(cli, ["solve", str(tmp_path / "missing.ini")])
    assert result.exit_code == 1
    assert "Cannot read scenario" in result.output


def test_verify_with_oracle(runner, write_scenario, tmp_path):
    """Test verify --oracle crra passes REF1 and writes verification.csv"""
    out = tmp_path / "out"

    result = runner.invoke(
        cli, ["verify", str(write_scenario()), "--oracle", "crra", "-o", str(out)]
    )

    assert result.exit_code == 0, result.output
    assert "PASSED" in result.output
    lines = (out / "verification.csv").read_text().splitlines()
    assert lines[0] == "name,computed,reference,tolerance,status,note"
    assert all(",pass," in line for line in lines[1:])


@pytest.mark.slow
@pytest.mark.integration
def test_verify_with_simulation(
    runner, write_scenario, ref1_ini, simulation_settings, tmp_path
):
    """Test verify --simulate passes every Monte Carlo check on REF1"""
    # Arrange
    simulation_settings(threads=2, block_size=1000)
    section = SIMULATION.format(n_paths=4000, dt=1.0 / 52.0, horizon=200, seed=11)
    path = write_scenario(ref1_ini + section)
    out = tmp_path / "out"

    # Act
    result = runner.invoke(cli, ["verify", str(path), "--simulate", "-o", str(out)])

    # Assert
    assert result.exit_code == 0, result.output
    statuses = read_statuses(out / "verification.csv")
    assert SIMULATION_CHECKS <= set(statuses)
    assert {name: statuses[name] for name in SIMULATION_CHECKS} == {
        name: "pass" for name in SIMULATION_CHECKS
    }


@pytest.mark.slow
def test_verify_simulation_reruns_are_byte_identical(
    runner, write_scenario, ref1_ini, simulation_settings, tmp_path
):
    """Test a fixed seed gives identical reports for one and four workers"""
    # Arrange
    section = SIMULATION.format(n_paths=400, dt=1.0 / 12.0, horizon=20, seed=3)
    path = write_scenario(ref1_ini + section)
    outputs = []

    # Act
    for threads in (1, 4):
        simulation_settings(threads=threads, block_size=100)
        out = tmp_path / f"threads_{threads}"
        result = runner.invoke(cli, ["verify", str(path), "--simulate", "-o", str(out)])
        outputs.append((result.exit_code, (out / "verification.csv").read_bytes()))

    # Assert
    assert outputs[0][0] in (0, 3)
    assert outputs[0] == outputs[1]
    statuses = read_statuses(tmp_path / "threads_1" / "verification.csv")
    assert SIMULATION_CHECKS <= set(statuses)


def test_verify_unknown_oracle_rejected(runner, write_scenario):
    """Test click rejects oracle names other than crra"""
    result = runner.invoke(cli, ["verify", str(write_scenario()), "--oracle", "log"])
    assert result.exit_code == 2
    assert "Invalid value" in result.output


def test_sweep_wage(runner, write_scenario, tmp_path):
    """Test the wage sweep reports monotone z_R and x_R"""
    out = tmp_path / "out"
    args = ["--param", "epsilon", "--values", "0.5,1,2", "-o", str(out)]

    result = runner.invoke(cli, ["sweep", str(write_scenario()), *args])

    assert result.exit_code == 0, result.output
    assert "epsilon sweep: 3 rows, 0 failed" in result.output
    assert "z_R decreasing: true" in result.output
    assert "x_R increasing: true" in result.output
    lines = (out / "sweep.csv").read_text().splitlines()
    assert len(lines) == 4
    assert lines[1].startswith("epsilon,0.5,ok,")


def test_sweep_unknown_parameter(runner, write_scenario):
    """Test --param outside the sweepable set is a usage error"""
    result = runner.invoke(
        cli, ["sweep", str(write_scenario()), "--param", "mu", "--values", "0.05"]
    )
    assert result.exit_code == 2


def test_sweep_unparseable_values(runner, write_scenario, tmp_path):
    """Test --values must be a comma list of numbers"""
    args = ["--param", "l", "--values", "a,b", "-o", str(tmp_path)]

    result = runner.invoke(cli, ["sweep", str(write_scenario()), *args])

    assert result.exit_code == 1
    assert "--values" in result.output
