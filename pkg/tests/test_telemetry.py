import numpy as np

from kdv5_control.services.telemetry import RunTelemetry


def test_run_and_phase_spans():
    telemetry = RunTelemetry()
    telemetry.reset()
    with telemetry.run("simulate", K=np.int64(4), T=0.5) as span:
        with telemetry.phase("evolve", dt=1e-3):
            pass
        telemetry.record(span, exit_code=0, skipped=None)

    spans = {span["name"]: span for span in telemetry.finished_spans()}
    assert set(spans) == {"kdv5.simulate", "evolve"}
    root = spans["kdv5.simulate"]["attributes"]
    assert root["command"] == "simulate"
    assert root["K"] == 4
    assert root["exit_code"] == 0
    assert "skipped" not in root
    assert spans["evolve"]["attributes"]["dt"] == 1e-3
    assert spans["evolve"]["duration_ms"] >= 0.0


def test_sequence_attributes():
    telemetry = RunTelemetry()
    telemetry.reset()
    with telemetry.phase("sweep", radii=[1, 2.5], labels=("a", 3)):
        pass
    (span,) = telemetry.finished_spans()
    assert list(span["attributes"]["radii"]) == [1.0, 2.5]
    assert list(span["attributes"]["labels"]) == ["a", "3"]


def test_reset_clears_spans():
    telemetry = RunTelemetry()
    with telemetry.phase("export"):
        pass
    telemetry.reset()
    assert telemetry.finished_spans() == []
