"""Run orchestration: configuration loading, solver dispatch and outputs."""

import json
import logging
import sys
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple, Union

import numpy as np
from dotenv import dotenv_values
from pydantic import ValidationError

from ..distance import squared_distance_atomic
from ..errors import ConfigError, HemqError, OptimizerInputError
from ..estimators import blue_one_sample, blue_two_sample, v_statistic
from ..measures import AtomicTarget, DiscreteMeasure, EmpiricalTarget, GaussianMixtureTarget
from ..metrics import adjusted_rand, assign_nearest, confusion_matrix, dve, project_to_dataset
from ..models.optimizer_spec import OptimizerMethod
from ..models.results import EstimatorKind, RunRecord
from ..models.run_spec import RunCommand, RunConfig, TargetKind, nest_flat_config
from ..optimizers import differential_evolution, exact_quantile_1d, gradient_flow, shemq
from .datasets import load_csv, load_idx, standardize
from .outputs import (
    load_quantizer,
    quantizer_json,
    resolve_output_dir,
    snapshots_json,
    to_json_text,
    trajectory_csv,
    write_outputs,
)
from .recipes import recipe_target

logger = logging.getLogger(__name__)

Target = Union[EmpiricalTarget, GaussianMixtureTarget, AtomicTarget]

EXIT_OK = 0
EXIT_RUNTIME_ERROR = 1
EXIT_INPUT_ERROR = 2


def load_run_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Optional[str]]] = None,
) -> RunConfig:
    """Read a flat ``KEY=VALUE`` file, apply flag overrides and validate."""
    flat: Dict[str, Optional[str]] = {}
    if path is not None:
        if not Path(path).is_file():
            raise ConfigError(f"config file not found: {path}")
        flat.update({k.lower(): v for k, v in dotenv_values(path).items()})
    for key, value in (overrides or {}).items():
        if value is not None:
            flat[key.lower()] = value
    try:
        return RunConfig.model_validate(nest_flat_config(flat))
    except KeyError as e:
        raise ConfigError(f"unknown config key {e.args[0]!r}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed JSON literal: {e}") from e
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from e


def build_target(config: RunConfig) -> Target:
    """Materialize the configured target measure."""
    spec = config.target
    if spec.kind == TargetKind.CSV:
        target: Target = load_csv(spec.path, spec.label_col)
    elif spec.kind == TargetKind.IDX:
        target = load_idx(spec.images_path, spec.labels_path, spec.limit)
    elif spec.kind == TargetKind.GAUSSIAN_MIXTURE:
        target = GaussianMixtureTarget(components=spec.components)
    elif spec.kind == TargetKind.ATOMIC:
        target = AtomicTarget(measure=DiscreteMeasure(points=spec.points, weights=spec.weights))
    else:
        target = recipe_target(
            spec.recipe, sigma=spec.recipe_sigma, dimension=spec.dimension, eps=spec.eps
        )
    if isinstance(target, EmpiricalTarget):
        data = target.data
        if spec.limit is not None and spec.kind == TargetKind.CSV:
            data = data[: spec.limit]
        labels = None if target.labels is None else target.labels[: data.shape[0]]
        if spec.standardize:
            data = standardize(data)
        target = EmpiricalTarget(data=data, labels=labels)
    return target


class QuantizationRunner:
    """Executes one configured run and stages its outputs."""

    def __init__(self, config: RunConfig) -> None:
        self.config = config
        self.target: Optional[Target] = None
        self.files: Dict[str, str] = {}

    def execute(self) -> dict:
        """Run the configured command and write all outputs at the end."""
        config = self.config
        logger.info(f"Starting {config.command.value} run (seed={config.seed})")
        self.target = build_target(config)
        self.files = {"config.json": to_json_text(config.to_echo())}

        handler = {
            RunCommand.QUANTIZE: self._quantize,
            RunCommand.FLOW: self._flow,
            RunCommand.EXACT1D: self._exact1d,
            RunCommand.ESTIMATE: self._estimate,
            RunCommand.EVAL: self._eval,
        }[config.command]
        metrics = handler()
        self.files["metrics.json"] = to_json_text(metrics)

        output_dir, directory_message = resolve_output_dir(config.output.directory)
        written = write_outputs(output_dir, self.files)
        logger.info(f"{config.command.value} finished; outputs in {output_dir}")

        result = {"ok": True, "command": config.command.value, "output": str(output_dir)}
        result["files"] = sorted(written)
        result["metrics"] = metrics
        if directory_message:
            result["message"] = directory_message
            logger.warning(directory_message)
        return result

    def _stage_record(self, record: RunRecord) -> dict:
        self.files["trajectory.csv"] = trajectory_csv(record)
        self.files["quantizer.json"] = quantizer_json(record.quantizer)
        if record.snapshots:
            self.files["snapshots.json"] = snapshots_json(record)
        metrics = {
            "iterations": len(record.trajectory),
            "initial_loss": record.initial_loss if record.trajectory else None,
            "final_loss": record.final_loss if record.trajectory else None,
        }
        if record.message:
            metrics["message"] = record.message
        metrics.update(self._labelled_metrics(record.quantizer))
        return metrics

    def _labelled_metrics(self, quantizer: DiscreteMeasure) -> dict:
        target = self.target
        if not isinstance(target, EmpiricalTarget) or target.labels is None:
            return {}
        if quantizer.dimension != target.dimension:
            return {}
        assignment = assign_nearest(quantizer.points, target.data)
        representatives = project_to_dataset(quantizer.points, target.data)
        return {
            "confusion": confusion_matrix(
                target.labels, assignment, n_atoms=quantizer.n_atoms
            ).tolist(),
            "ari": adjusted_rand(target.labels, assignment),
            "dve": dve(target.labels[representatives]),
        }

    def _quantize(self) -> dict:
        config = self.config
        method = config.optimizer.method
        if method == OptimizerMethod.SHEMQ:
            record = shemq(config.kernel, self.target, config.q, config.optimizer, config.init_weights)
        elif method == OptimizerMethod.DIFFERENTIAL_EVOLUTION:
            record = differential_evolution(
                config.kernel, self.target, config.q, config.optimizer, config.mass
            )
        elif method == OptimizerMethod.GRADIENT_FLOW:
            return self._flow()
        else:
            return self._exact1d()
        metrics = self._stage_record(record)
        metrics["method"] = method.value
        exact = self.target.exact_measure()
        if exact is not None and exact.n_atoms <= 5000:
            metrics["exact_loss"] = squared_distance_atomic(
                config.kernel, record.quantizer, exact
            ).total
        return metrics

    def _flow_target(self) -> Tuple[np.ndarray, float]:
        target = self.target
        if not isinstance(target, GaussianMixtureTarget) or len(target.components) != 1:
            raise OptimizerInputError("gradient flow needs a single isotropic Gaussian target")
        if not self.config.kernel.is_energy:
            raise OptimizerInputError("gradient flow needs the energy kernel (r=1, a=0)")
        return target.means[0], float(target.sigmas[0])

    def _flow(self) -> dict:
        config = self.config
        mean, sigma = self._flow_target()
        if config.quantizer_path is not None:
            start = load_quantizer(config.quantizer_path)
        else:
            rng = np.random.default_rng(config.seed)
            start = DiscreteMeasure.uniform(self.target.draw(config.q, rng), probability=False)
        record = gradient_flow(start, mean, sigma, config.optimizer)
        metrics = self._stage_record(record)
        metrics["method"] = OptimizerMethod.GRADIENT_FLOW.value
        return metrics

    def _exact1d(self) -> dict:
        config = self.config
        if self.target.dimension != 1:
            raise OptimizerInputError("exact1d needs a one-dimensional target")
        if not config.kernel.is_energy:
            raise OptimizerInputError("exact1d needs the energy kernel (r=1, a=0)")
        quantizer = exact_quantile_1d(self.target.inverse_cdf(), config.q)
        self.files["trajectory.csv"] = trajectory_csv(None)
        self.files["quantizer.json"] = quantizer_json(quantizer)
        return {"method": OptimizerMethod.EXACT_QUANTILE_1D.value, "J": config.q}

    def _estimate(self) -> dict:
        """Estimate d^2 between a quantizer (or a sample CSV) and the target.

        A dataset target contributes its rows as samples; other targets are
        drawn ``samples`` times.
        """
        config = self.config
        rng = np.random.default_rng(config.seed)
        if isinstance(self.target, EmpiricalTarget):
            zs = self.target.data
        else:
            zs = self.target.draw(config.samples, rng)

        if config.estimator == EstimatorKind.BLUE_ONE_SAMPLE:
            quantizer = load_quantizer(config.quantizer_path)
            estimate = blue_one_sample(config.kernel, quantizer, zs, seed=config.seed)
            return {"estimate": estimate.to_json_dict()}

        if config.sample_path is not None:
            xs = load_csv(config.sample_path).data
        else:
            quantizer = load_quantizer(config.quantizer_path)
            xs = AtomicTarget(measure=quantizer).draw(config.samples, rng)
        if config.estimator == EstimatorKind.BLUE_TWO_SAMPLE:
            estimate = blue_two_sample(
                config.kernel,
                xs,
                zs,
                seed=config.seed,
                legacy_cross_denominator=config.legacy_cross_denominator,
            )
        else:
            estimate = v_statistic(config.kernel, xs, zs, seed=config.seed)
        return {"estimate": estimate.to_json_dict()}

    def _eval(self) -> dict:
        quantizer = load_quantizer(self.config.quantizer_path)
        target = self.target
        if not isinstance(target, EmpiricalTarget):
            raise OptimizerInputError("eval needs a dataset target")
        metrics = self._labelled_metrics(quantizer)
        if not metrics:
            assignment = assign_nearest(quantizer.points, target.data)
            metrics = {"counts": np.bincount(assignment, minlength=quantizer.n_atoms).tolist()}
        return metrics


def error_payload(command: str, exc: BaseException) -> dict:
    """The ``{"ok": false, ...}`` document printed for a failed command."""
    return {
        "ok": False,
        "error": str(exc),
        "command": command,
        "module": getattr(exc, "module", type(exc).__module__),
    }


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (ValueError, ValidationError)):
        return EXIT_INPUT_ERROR
    return EXIT_RUNTIME_ERROR


def report_error(command: str, exc: BaseException) -> int:
    logger.exception(f"{command} failed")
    print(json.dumps(error_payload(command, exc)), file=sys.stdout)
    return exit_code_for(exc)


def run(config: RunConfig) -> int:
    """Execute a run, print its JSON result and return the process exit code."""
    command = config.command.value
    try:
        result = QuantizationRunner(config).execute()
    except (HemqError, ValueError, RuntimeError, OSError) as e:
        return report_error(command, e)
    print(json.dumps(result, indent=2), file=sys.stdout)
    return EXIT_OK
