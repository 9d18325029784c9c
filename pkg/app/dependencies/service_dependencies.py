from typing import Optional

from app.config.settings import Settings, get_settings
from app.services.export_service import ExportService
from app.services.scenario_service import ScenarioService
from app.services.sweep_service import SweepService
from app.services.verification_service import VerificationService


def get_scenario_service(settings: Optional[Settings] = None) -> ScenarioService:
    """Dependency factory for ScenarioService with the process settings."""
    return ScenarioService(settings or get_settings())


def get_verification_service(
    settings: Optional[Settings] = None,
) -> VerificationService:
    settings = settings or get_settings()
    return VerificationService(get_scenario_service(settings), settings)


def get_sweep_service(settings: Optional[Settings] = None) -> SweepService:
    return SweepService(get_scenario_service(settings))


def get_export_service() -> ExportService:
    return ExportService()
