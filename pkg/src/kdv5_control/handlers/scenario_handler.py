"""
Runs one scenario command end to end inside a telemetry span and writes its
artifacts plus manifest.json. Numerical failures still leave a manifest behind.
"""

import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional, Union

import numpy as np

from kdv5_control.errors import NUMERICAL_ERRORS, ConfigError, DomainError
from kdv5_control.evolution.ledger import energy_ledger
from kdv5_control.evolution.linear import LinearFlow, LinearModel, spectral_abscissa
from kdv5_control.evolution.nonlinear import (
    NonlinearModel,
    evolve_nonlinear,
    measure_decay,
    nonlinear_forcing,
    x_space_check,
)
from kdv5_control.hum.gramian import observability_report
from kdv5_control.hum.signal import physical_control
from kdv5_control.hum.synthesis import solve_linear_control, solve_nonlinear_control
from kdv5_control.loaders.scenario_loader import (
    COMMANDS,
    Scenario,
    build_field,
    build_grid,
    build_linear_model,
    build_nonlinear_model,
    build_profile,
)
from kdv5_control.services.export import (
    write_json,
    write_manifest,
    write_norms_csv,
    write_signal_csv,
    write_trajectory_csv,
)
from kdv5_control.services.telemetry import RunTelemetry, telemetry_service
from kdv5_control.services.verification import VerificationSuite
from kdv5_control.spectral.trajectory import Trajectory, l2_time_norm

logger = logging.getLogger(__name__)


class ScenarioHandler:
    def __init__(
        self,
        scenario: Scenario,
        out_dir: Optional[Union[str, Path]] = None,
        threads: Optional[int] = None,
        telemetry: RunTelemetry = telemetry_service,
    ):
        """
        Initialize the scenario handler.

        Args:
            scenario: A validated scenario
            out_dir: Output directory; defaults to output.directory of the config
            threads: Worker threads; defaults to run.threads of the config
            telemetry: Telemetry service tracing the run
        """
        self.scenario = scenario
        self.config = scenario.config
        self.run_config = scenario.config.run
        self.out_dir = Path(out_dir if out_dir is not None else self.config.output.directory)
        self.threads = threads or self.run_config.threads
        self.telemetry = telemetry
        self.rng = np.random.default_rng(self.run_config.seed)
        self.files: List[Path] = []

        self.grid = build_grid(self.config)
        self.profile = build_profile(self.config, self.grid)

    @property
    def commands(self) -> Dict[str, Callable[[], int]]:
        return {
            "simulate": self.simulate,
            "stabilize": self.stabilize,
            "control": self.control,
            "observability": self.observability,
            "verify": self.verify,
        }

    def run(self, command: Optional[str] = None) -> int:
        """Run one command and write its artifacts plus the manifest; returns the exit code.

        Numerical errors are re-raised after a manifest with their exit code is written.
        """
        command = command or self.scenario.command
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}", [f"command must be one of {', '.join(COMMANDS)}"])
        if command != self.scenario.command:
            logger.warning(f"Running {command!r}; the config names run.command={self.scenario.command!r}")
        self.files = []
        attributes = {
            "K": self.grid.n_modes,
            "T": self.run_config.T,
            "dt": self.run_config.dt,
            "threads": self.threads,
            "profile": self.profile.kind,
        }
        try:
            with self.telemetry.run(command, **attributes) as span:
                exit_code = self.commands[command]()
                self.telemetry.record(span, exit_code=exit_code)
        except NUMERICAL_ERRORS as e:
            self._manifest(command, e.exit_code)
            raise
        self._manifest(command, exit_code)
        return exit_code

    def _manifest(self, command: str, exit_code: int) -> None:
        write_manifest(
            self.out_dir,
            command,
            self.scenario.config_hash,
            self.run_config.seed,
            self.threads,
            self.files,
            exit_code,
        )

    def _wants(self, fmt: str) -> bool:
        return fmt in self.config.output.formats

    def _json(self, name: str, payload) -> None:
        if self._wants("json"):
            self.files.append(write_json(self.out_dir / name, payload))

    def _time_series(self, trajectory: Trajectory) -> None:
        if not self._wants("csv"):
            return
        output = self.config.output
        with self.telemetry.phase("export", nodes=len(trajectory)):
            self.files.append(
                write_trajectory_csv(
                    self.out_dir / "trajectory.csv",
                    trajectory,
                    output.norm_orders,
                    output.physical_samples,
                    output.stride,
                )
            )
            self.files.append(
                write_norms_csv(self.out_dir / "norms.csv", trajectory, output.norm_orders, output.stride)
            )

    def _models(self, feedback_on: Optional[bool] = None):
        linear = build_linear_model(self.config, self.profile, feedback_on)
        return linear, build_nonlinear_model(self.config, linear)

    def _evolve(self, model: NonlinearModel, flow: LinearFlow) -> Trajectory:
        u0 = build_field(self.config.initial_data, self.grid, self.rng)
        run = self.run_config
        with self.telemetry.phase("evolve", T=run.T, dt=run.dt, s=run.s):
            return evolve_nonlinear(model, u0, T=run.T, dt=run.dt, s=run.s, flow=flow)

    def _ledger(self, model: NonlinearModel, trajectory: Trajectory) -> None:
        ledger = energy_ledger(model.linear, trajectory, nonlinear_forcing(model, trajectory))
        logger.info(f"Energy ledger residual {ledger.residual:.3e} ({ledger.relative_residual:.3e} relative)")
        self._json("ledger.json", ledger.to_dict())

    def _flow(self, linear: LinearModel) -> LinearFlow:
        with self.telemetry.phase("assemble_generator", dim=2 * self.grid.n_modes):
            return LinearFlow.forward(linear)

    def simulate(self) -> int:
        _, model = self._models()
        trajectory = self._evolve(model, self._flow(model.linear))
        self._time_series(trajectory)
        self._ledger(model, trajectory)
        return 0

    def stabilize(self) -> int:
        if not self.config.model.feedback_on:
            logger.info("stabilize runs with the feedback on regardless of model.feedback_on")
        linear, model = self._models(feedback_on=True)
        flow = self._flow(linear)
        trajectory = self._evolve(model, flow)
        self._time_series(trajectory)
        self._ledger(model, trajectory)

        s = self.run_config.s
        fit = measure_decay(trajectory, s, predicted_rate=spectral_abscissa(flow.generator))
        decay = fit.to_dict()
        decay["x_space"] = None
        if not fit.degenerate and trajectory.t_final >= 1.0:
            try:
                decay["x_space"] = x_space_check(trajectory, s, fit.rate, linear.order_l)
            except DomainError as e:
                logger.info(f"Skipping unit-interval bookkeeping: {e}")
        logger.info(f"Decay rate {fit.rate:.4g} (spectral abscissa {fit.predicted_rate:.4g})")
        self._json("decay.json", decay)
        return 0

    def control(self) -> int:
        if self.config.target_data is None:
            raise ConfigError("control runs need target_data", ["target_data: missing"])
        run = self.run_config
        linear, model = self._models()
        u0 = build_field(self.config.initial_data, self.grid, self.rng)
        uT = build_field(self.config.target_data, self.grid, self.rng)
        with self.telemetry.phase("solve_control", mode=run.control_mode, weighted=run.weighted) as span:
            if run.control_mode == "linear":
                signal = solve_linear_control(
                    linear,
                    u0,
                    uT,
                    run.T,
                    run.dt,
                    run.s,
                    weighted=run.weighted,
                    method=run.method,
                    threads=self.threads,
                    seed=run.seed,
                )
            else:
                signal = solve_nonlinear_control(
                    model,
                    u0,
                    uT,
                    run.T,
                    run.dt,
                    run.s,
                    tol=run.tol,
                    delta=run.delta,
                    relaxation=run.relaxation,
                    max_iterations=run.max_iterations,
                    weighted=run.weighted,
                    method=run.method,
                    threads=self.threads,
                    seed=run.seed,
                )
            self.telemetry.record(span, endpoint_error=signal.endpoint_error, iterations=signal.diagnostics.get("iterations"))

        trajectory = signal.trajectory
        if self._wants("csv"):
            self.files.append(write_signal_csv(self.out_dir / "signal.csv", signal))
        self._time_series(trajectory)
        h = physical_control(signal, trajectory.mean_zero(), linear)
        self._json(
            "control.json",
            {
                "mode": run.control_mode,
                "endpoint_error": signal.endpoint_error,
                "energy": signal.energy(),
                "physical_control_l2": l2_time_norm(h, 0.0),
                "diagnostics": signal.diagnostics,
            },
        )
        return 0

    def observability(self) -> int:
        linear, _ = self._models()
        run = self.run_config
        with self.telemetry.phase("gramian", T=run.T, dt=run.dt) as span:
            report = observability_report(linear, run.T, run.dt, self.threads)
            self.telemetry.record(span, lambda_min=report.lambda_min)
        self._json("gramian.json", report.to_dict())
        return 0

    def verify(self) -> int:
        run = self.run_config
        _, model = self._models()
        suite = VerificationSuite(
            model,
            run.T,
            run.dt,
            run.s,
            amplitude=self.config.verify.amplitude,
            seed=run.seed,
            threads=self.threads,
        )
        with self.telemetry.phase("verify", checks=len(suite.checks())):
            report = suite.run(self.config.verify.horizons, self.config.verify.radii)
        # verify.json is written regardless of output.formats
        self.files.append(write_json(self.out_dir / "verify.json", report.to_dict()))
        if not report.passed:
            logger.warning(f"Failed checks: {', '.join(report.failures)}")
            return 3
        return 0
