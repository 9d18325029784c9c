from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, Field


class AssumptionReport(BaseModel):
    """Outcome of the numeric assumption checks for a preference pair."""

    integrable_pre: bool = Field(
        description="Lower tail of eta^{-n2} I_{u_B} decays geometrically"
    )
    integrable_post: bool = Field(
        description="Lower tail of eta^{-n2} I_{u_A} decays geometrically"
    )
    utility_ordering: bool = Field(
        description="u_B(I_{u_B}(y)) < u_A(I_{u_A}(y)) on every probe"
    )
    psi_negative_near_zero: bool = Field(
        description="Psi < 0 and increasing at the smallest probes"
    )
    worst_ordering_margin: float = Field(
        description="min over probes of u_A(I_{u_A}) - u_B(I_{u_B})"
    )
    psi_at_smallest: List[float] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (
            self.integrable_pre
            and self.integrable_post
            and self.utility_ordering
            and self.psi_negative_near_zero
        )

    def failures(self) -> List[str]:
        messages = []
        if not self.integrable_pre:
            messages.append("pre-retirement inverse marginal is not integrable at 0")
        if not self.integrable_post:
            messages.append("post-retirement inverse marginal is not integrable at 0")
        if not self.utility_ordering:
            messages.append(
                "u_B(I_B(y)) < u_A(I_A(y)) fails "
                f"(worst margin {self.worst_ordering_margin:.6g})"
            )
        if not self.psi_negative_near_zero:
            messages.append("Psi is not negative and increasing near 0")
        return messages


class VIReport(BaseModel):
    """Variational inequality residuals of the labor value on a probe grid."""

    n_stopping: int
    n_continuation: int
    n_skipped: int
    max_stopping_violation: float = Field(
        description="max h(y) over stopping probes; must be <= 0"
    )
    max_continuation_residual: float = Field(
        description="max |L P + h| / max(1, |h|) over continuation probes"
    )
    tolerance: float = 1e-6

    @property
    def passed(self) -> bool:
        return (
            self.max_stopping_violation <= 0.0
            and self.max_continuation_residual <= self.tolerance
        )


class CheckStatus(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    INCONCLUSIVE = "inconclusive"


class VerificationCheck(BaseModel):
    name: str
    computed: float
    reference: float
    tolerance: float
    status: CheckStatus
    note: str = ""


class VerificationReport(BaseModel):
    checks: List[VerificationCheck] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.status == CheckStatus.PASS for check in self.checks)

    def add(
        self,
        name: str,
        computed: float,
        reference: float,
        tolerance: float,
        *,
        relative: bool = True,
        note: str = "",
        inconclusive: bool = False,
        passed: Optional[bool] = None,
    ) -> VerificationCheck:
        """
        Append a check. Unless ``passed`` is given, the check passes when
        |computed - reference| <= tolerance, scaled by |reference| when
        ``relative`` and the reference is non-zero.
        """
        if passed is None:
            scale = abs(reference) if relative and reference != 0.0 else 1.0
            passed = abs(computed - reference) <= tolerance * scale
        if inconclusive:
            status = CheckStatus.INCONCLUSIVE
        else:
            status = CheckStatus.PASS if passed else CheckStatus.FAIL
        check = VerificationCheck(
            name=name,
            computed=computed,
            reference=reference,
            tolerance=tolerance,
            status=status,
            note=note,
        )
        self.checks.append(check)
        return check
