import numpy as np
import pytest

from ordered_dp import (
    FiniteMDP,
    FirmExitParams,
    IterationControl,
    build_firm_exit_model,
    value_function_iteration,
)


@pytest.fixture
def one_state_mdp():
    """One state, two actions with rewards (1, 2), beta = 0.5, self loop."""
    return FiniteMDP([[1.0, 2.0]], np.ones((1, 2, 1)), 0.5)


@pytest.fixture(scope="session")
def firm_model():
    return build_firm_exit_model(FirmExitParams())


@pytest.fixture(scope="session")
def firm_solution(firm_model):
    ctrl = IterationControl(tol=1e-8)
    return value_function_iteration(firm_model, np.zeros(firm_model.value_size), ctrl)


@pytest.fixture(scope="session")
def firm_refined(firm_model, firm_solution):
    """VFI warm-started from the 1e-8 solution and run to 1e-11."""
    ctrl = IterationControl(tol=1e-11)
    return value_function_iteration(firm_model, firm_solution.value, ctrl)


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion, driven by the recorded test outcome."""
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(getattr(rep, "user_properties", []))
            if "criterion" in props and rep.when == "call":
                lines.append((props["criterion"], outcome.upper()[:4], props.get("detail", "")))
    if lines:
        terminalreporter.section("acceptance criteria")
        for crit, status, detail in sorted(lines, key=lambda t: int(t[0].split()[0])):
            terminalreporter.write_line(f"[{status}] criterion {crit}  {detail}")
