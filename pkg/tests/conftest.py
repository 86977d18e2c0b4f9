import pytest

from flowsenate import synth


@pytest.fixture(scope="session")
def mixed_trace():
    """The week-long 40-injection scenario; generated once per session."""
    spec = synth.mixed_scenario()
    table, truths = synth.generate(spec)
    return spec, table, truths


@pytest.fixture(scope="session")
def small_trace():
    """A 48-bin trace with one attack of each kind."""
    spec = synth.ScenarioSpec(
        duration_bins=48, flows_per_bin=4000, seed=11,
        injections=(
            synth.InjectionSpec(synth.AttackKind.SCAN, 10, 140),
            synth.InjectionSpec(synth.AttackKind.DOS, 20, 80),
            synth.InjectionSpec(synth.AttackKind.DDOS, 30, 260),
        ))
    table, truths = synth.generate(spec)
    return spec, table, truths
