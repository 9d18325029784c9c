import logging
from pathlib import Path
from typing import Dict, List, Tuple

from app.schemas.report_schemas import VerificationReport
from app.schemas.solution_schemas import PolicyRow, SolutionSummary, SweepRow
from app.services.scenario_service import ScenarioSolution
from app.services.sweep_service import SweepResult
from app.shared.helpers.csv_helper import (
    format_value,
    render_csv,
    write_files_atomically,
)

logger = logging.getLogger(__name__)

POLICY_COLUMNS = ["y", "X", "c", "pi", "P", "human_wealth", "J"]
VERIFICATION_COLUMNS = ["name", "computed", "reference", "tolerance", "status", "note"]
SWEEP_COLUMNS = list(SweepRow.model_fields)


class ExportService:
    """Renders results as text and CSV and writes them atomically."""

    # ---------------------------------------------------------------------
    # Renderers
    # ---------------------------------------------------------------------

    def solution_items(self, summary: SolutionSummary) -> List[Tuple[str, object]]:
        items: List[Tuple[str, object]] = [
            ("scenario", summary.scenario),
            ("n1", summary.n1),
            ("n2", summary.n2),
            ("merton", summary.merton),
            ("z_bar", summary.z_bar),
            ("z_R", summary.z_R),
            ("D", summary.D),
            ("x_R", summary.x_R),
            ("smooth_pasting_value", summary.smooth_pasting_value),
            ("smooth_pasting_slope", summary.smooth_pasting_slope),
            ("duality_gap", summary.duality_gap),
            ("portfolio_jump", summary.portfolio_jump),
            ("consumption_jump", summary.consumption_jump),
            ("assumptions_passed", summary.assumptions.passed),
            ("assumption_worst_margin", summary.assumptions.worst_ordering_margin),
        ]
        if summary.vi is not None:
            items += [
                ("vi_passed", summary.vi.passed),
                ("vi_max_stopping_violation", summary.vi.max_stopping_violation),
                ("vi_max_continuation_residual", summary.vi.max_continuation_residual),
            ]
        return items

    def render_solution_csv(self, summary: SolutionSummary) -> str:
        rows = [{"key": k, "value": v} for k, v in self.solution_items(summary)]
        return render_csv(["key", "value"], rows)

    def render_policy_csv(self, rows: List[PolicyRow]) -> str:
        return render_csv(POLICY_COLUMNS, (row.model_dump() for row in rows))

    def render_summary(self, summary: SolutionSummary) -> str:
        lines = [f"Scenario: {summary.scenario}"]
        lines += [
            f"  {key:<30} {format_value(value)}"
            for key, value in self.solution_items(summary)
            if key != "scenario"
        ]
        for failure in summary.assumptions.failures():
            lines.append(f"  assumption failure: {failure}")
        lines.append(f"  {'elapsed_seconds':<30} {summary.elapsed_seconds:.3f}")
        return "\n".join(lines) + "\n"

    def render_verification_csv(self, report: VerificationReport) -> str:
        return render_csv(
            VERIFICATION_COLUMNS, (check.model_dump() for check in report.checks)
        )

    def render_verification_table(self, report: VerificationReport) -> str:
        width = max((len(c.name) for c in report.checks), default=4)
        header = (
            f"{'check':<{width}}  {'computed':>24}  {'reference':>24}  "
            f"{'tolerance':>10}  status"
        )
        lines = [header]
        for c in report.checks:
            lines.append(
                f"{c.name:<{width}}  {c.computed:>24.17g}  {c.reference:>24.17g}  "
                f"{c.tolerance:>10.3g}  {c.status.value}"
                + (f"  ({c.note})" if c.note else "")
            )
        verdict = "PASSED" if report.passed else "FAILED"
        passed = sum(c.status.value == "pass" for c in report.checks)
        lines.append(f"{verdict}: {passed}/{len(report.checks)} checks")
        return "\n".join(lines) + "\n"

    def render_sweep_csv(self, result: SweepResult) -> str:
        return render_csv(SWEEP_COLUMNS, (row.model_dump() for row in result.rows))

    # ---------------------------------------------------------------------
    # Writers
    # ---------------------------------------------------------------------

    def write_solution(
        self, solved: ScenarioSolution, out_dir: str | Path
    ) -> List[Path]:
        files: Dict[str, str] = {
            "summary.txt": self.render_summary(solved.summary),
            "solution.csv": self.render_solution_csv(solved.summary),
            "policy_table.csv": self.render_policy_csv(solved.policy_rows),
        }
        return self._write(out_dir, files)

    def write_verification(
        self, report: VerificationReport, out_dir: str | Path
    ) -> List[Path]:
        files = {"verification.csv": self.render_verification_csv(report)}
        return self._write(out_dir, files)

    def write_sweep(self, result: SweepResult, out_dir: str | Path) -> List[Path]:
        return self._write(out_dir, {"sweep.csv": self.render_sweep_csv(result)})

    def _write(self, out_dir: str | Path, files: Dict[str, str]) -> List[Path]:
        written = write_files_atomically(out_dir, files)
        for path in written:
            logger.info(f"Wrote {path}")
        return written
