"""Assembled result panels for the CLI."""

import numpy as np
import structlog

from ring_analyzer.config import get_settings
from ring_analyzer.core.asymptotics import (
    c1_tail_bound,
    c2_fit_with_spread,
    correction_c1,
    correction_c2_fit,
    factorial_tail,
    limit_second_moment,
)
from ring_analyzer.core.distribution import TWO_E_INV, residues, tail_law
from ring_analyzer.models.limits import LimitReport, PanelRow

logger = structlog.get_logger(__name__)

C2_FIT_RANGE = (250, 300)
TAIL_LAW_K_MAX = 15


def limits_report(nu: int | None = None) -> LimitReport:
    """Every limit constant at t = 1 in one report."""
    nu = get_settings().numerics.default_nu if nu is None else nu
    moments = limit_second_moment(nu)
    law = tail_law(TAIL_LAW_K_MAX)
    return moments.model_copy(
        update={
            "c1": correction_c1(nu),
            "c2": correction_c2_fit(*C2_FIT_RANGE, nu=nu),
            "rho": law.rho,
            "tail_coefficient": law.coefficient,
        }
    )


def limits_panel(nu: int | None = None) -> list[PanelRow]:
    """Rows (name, value, error bound) of the limit constants.

    The C2 bound is the spread of the fitted samples; the rho bound uses the
    largest computed residue as an envelope for the neglected ones.
    """
    report = limits_report(nu)
    nu = report.truncation_nu
    assert report.m_inf is not None and report.m2_inf is not None
    assert report.var_inf is not None and report.c1 is not None
    assert report.c2 is not None and report.rho is not None
    assert report.tail_coefficient is not None

    mean_bound = factorial_tail(nu) / (1.0 - np.exp(-1.0))
    rho_bound = 2.0 * max(residues(TAIL_LAW_K_MAX)) * factorial_tail(TAIL_LAW_K_MAX) / np.e
    _, spread = c2_fit_with_spread(*C2_FIT_RANGE, nu=nu)
    rows = [
        PanelRow(name="M_inf", value=report.m_inf, error_bound=mean_bound),
        PanelRow(name="M2_inf", value=report.m2_inf, error_bound=report.tail_bound),
        PanelRow(
            name="var_inf",
            value=report.var_inf,
            error_bound=report.tail_bound + 2.0 * report.m_inf * mean_bound,
        ),
        PanelRow(name="C1", value=report.c1, error_bound=c1_tail_bound(nu)),
        PanelRow(name="C2", value=report.c2, error_bound=abs(report.c2) * spread),
        PanelRow(name="rho", value=report.rho, error_bound=rho_bound),
        PanelRow(
            name="coef",
            value=report.tail_coefficient,
            error_bound=2.0 * rho_bound / (1.0 - TWO_E_INV),
        ),
    ]
    logger.debug("limits_panel_built", nu=nu, rows=len(rows))
    return rows
