#!/usr/bin/env python3
"""
Moran Lab
Command controller tying the lab modules into reproducible runs

Each command routes to one handler. Handlers return an output payload and
write their artifacts under <output_dir>/<run hash prefix>/; the controller
appends the run record to <output_dir>/runs.jsonl and turns failed
verifications into VerificationFailure (exit code 3).
"""

import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from config_loader import LabSettings, RunConfig, load_settings
from dimension_lab import (
    beurling_estimate, beurling_formula_ims, dyadic_scales, entropy_estimate, lacunary_check
)
from integer_moran import IntegerMoranData, integer_moran_set, natural_scales
from lab_errors import MoranLabError, ValidationError, VerificationFailure
from logger_config import get_lab_logger, log_error
from measure_engine import fourier_nondecay_probe, level_measure, scaled_support_max
from moran_system import SequenceSpec, hausdorff_support_dim, upper_entropy_dim
from result_writer import (
    ResultRecord, append_record, config_hash, write_csv, write_int_list, write_jsonl
)
from spectrum_factory import (
    SignRule, SignWord, Spectrum, SpectrumKind, canonical_spectrum,
    continuum_family_sample, intermediate_spectrum, lacunary_spectrum, sign_word_spectrum,
    spectrum_for_dimension, validate_tree_mapping
)
from spectrum_verifier import (
    compatible_pair_check, completeness_profile, level_unitarity, pairwise_orthogonal,
    separation_check
)

logger = get_lab_logger()

Outputs = Dict[str, Any]

NATURAL_CUTOFF_BITS = 20


class MoranLab:
    """Runs lab commands from resolved configs"""

    def __init__(self, settings: Optional[LabSettings] = None):
        self.settings = settings or load_settings()
        self.output_root = Path(self.settings.output_dir)
        self.artifacts: List[str] = []
        self.failures: List[str] = []
        self.run_dir = self.output_root

    # ==================== RUN ====================

    def run_command(self, cfg: RunConfig) -> ResultRecord:
        """
        Run one resolved config

        Args:
            cfg: Output of parse_config / build_run_config

        Returns:
            ResultRecord (also appended to runs.jsonl)

        Raises:
            VerificationFailure: a check found a counterexample (record is written first)
            MoranLabError: any module error, unchanged
        """
        run_id = config_hash(cfg.resolved())
        self.run_id = run_id
        self.run_dir = self.output_root / run_id[:12]
        self.artifacts = []
        self.failures = []

        print(f"🧮 Running {cfg.command} (run {run_id[:12]})")
        started = time.perf_counter()
        try:
            outputs = self._route_to_handler(cfg)
        except MoranLabError as e:
            logger.error(f"{cfg.command} failed: {e}", exc_info=True)
            raise
        elapsed = time.perf_counter() - started

        outputs["config"] = cfg.resolved()
        record = ResultRecord(run_id, cfg.command, outputs, {"seconds": round(elapsed, 6)},
                              list(self.artifacts))
        append_record(self.output_root / "runs.jsonl", record)
        logger.info(f"{cfg.command} finished in {elapsed:.3f}s, {len(self.artifacts)} artifacts")

        if self.failures:
            for failure in self.failures:
                print(f"❌ {failure}")
            raise VerificationFailure("; ".join(self.failures))
        print(f"✅ {cfg.command} done in {elapsed:.2f}s")
        return record

    def _route_to_handler(self, cfg: RunConfig) -> Outputs:
        """Route a command to its handler"""
        command = cfg.command
        params = cfg.parameters

        if command == "dims":
            return self._handle_dims_commands(cfg, params)
        elif command == "spectrum-gen":
            return self._handle_spectrum_gen_commands(cfg, params)
        elif command == "spectrum-verify":
            return self._handle_spectrum_verify_commands(cfg, params)
        elif command == "dim-beurling":
            return self._handle_beurling_commands(cfg, params)
        elif command == "dim-entropy":
            return self._handle_entropy_commands(cfg, params)
        elif command == "fourier-probe":
            return self._handle_fourier_commands(cfg, params)
        elif command == "ims":
            return self._handle_ims_commands(cfg, params)
        raise ValidationError(f"unknown command {command!r}")

    def _artifact(self, path: Path):
        self.artifacts.append(str(path))
        print(f"📄 Wrote {path}")

    # ==================== SPECTRA ====================

    def _build_spectrum(self, cfg: RunConfig, params: Dict[str, Any]) -> Spectrum:
        system = cfg.system
        kind = params["kind"]
        depth = self.settings.thin_depth
        if kind == "canonical":
            return canonical_spectrum(system)
        if kind == "lacunary":
            return lacunary_spectrum(system)
        if kind == "intermediate":
            return intermediate_spectrum(system, params["t"], depth)
        if kind == "signword":
            return sign_word_spectrum(system, SignWord(SignRule.PERIODIC, pattern=tuple(params["signs"])))
        if kind == "continuum":
            return continuum_family_sample(system, params["t"], params["bits"], params["seed"], depth)
        return spectrum_for_dimension(system, params["t"], depth)

    def _index_cap(self, spectrum: Spectrum, params: Dict[str, Any]) -> int:
        cap = spectrum.max_index(params["max_index"])
        if cap < params["max_index"]:
            print(f"⚠️  Bits cover indices up to {cap} only")
        return cap

    def _spectrum_points(self, spectrum: Spectrum, params: Dict[str, Any]) -> Tuple[List[int], str]:
        """Points of the configured truncation: level view or index view"""
        if params["level"] is not None:
            return spectrum.level_points(params["level"]), f"level {params['level']}"
        cap = self._index_cap(spectrum, params)
        return spectrum.points(cap), f"indices 0..{cap}"

    def _handle_spectrum_gen_commands(self, cfg: RunConfig, params: Dict[str, Any]) -> Outputs:
        """Generate a spectrum truncation"""
        spectrum = self._build_spectrum(cfg, params)
        print(f"🎼 Spectrum: {spectrum.kind.value}")

        if params["level"] is not None:
            points = spectrum.level_points(params["level"])
            self._artifact(write_int_list(self.run_dir / "points.txt", points, self.run_id))
            view = f"level {params['level']}"
        else:
            cap = self._index_cap(spectrum, params)
            records = list(spectrum.records(cap))
            points = [lam for _, lam, _ in records]
            self._artifact(write_csv(self.run_dir / "spectrum.csv", ("n", "lambda", "part"),
                                     ((n, lam, part or "") for n, lam, part in records), self.run_id))
            self._artifact(write_int_list(self.run_dir / "points.txt", points, self.run_id))
            view = f"indices 0..{cap}"

        print(f"   {len(points)} points ({view})")
        return {"spectrum": spectrum.describe(), "view": view, "count": len(points),
                "max_point": max(points), "min_point": min(points)}

    def _handle_spectrum_verify_commands(self, cfg: RunConfig, params: Dict[str, Any]) -> Outputs:
        """Run verifier checks on a spectrum truncation"""
        system = cfg.system
        spectrum = self._build_spectrum(cfg, params)
        check = params["check"]
        run_all = check == "all"
        outputs: Outputs = {"spectrum": spectrum.describe(), "checks": {}}

        if run_all or check == "orthogonality":
            points, view = self._spectrum_points(spectrum, params)
            report = pairwise_orthogonal(system, points, self.settings.threads)
            outputs["checks"]["orthogonality"] = dict(report.to_dict(), view=view)
            print(f"🔍 Orthogonality on {view}: {'✅' if report.passed else '❌'} {report}")
            if not report.passed:
                self.failures.append(f"orthogonality: {report.failure_count} bad differences")

        if run_all or check == "unitarity":
            outputs["checks"]["unitarity"] = self._verify_unitarity(cfg, spectrum, params)

        if run_all or check == "completeness":
            outputs["checks"]["completeness"] = self._verify_completeness(cfg, spectrum, params)

        if (run_all and spectrum.kind in (SpectrumKind.CANONICAL, SpectrumKind.SIGN_WORD)) \
                or check == "separation":
            word = spectrum.sign_word or SignWord.plus()
            level = params["level"] or 3
            report = separation_check(system, word, level, self.settings.max_level)
            outputs["checks"]["separation"] = report.to_dict()
            print(f"📏 Separation at level {level}: min distance {float(report.min_distance):.6f} "
                  f"(bound {report.bound}) {'✅' if report.passed else '❌'}")
            if not report.passed:
                self.failures.append(f"separation: distance {report.min_distance} < {report.bound}")

        if (run_all and spectrum.sign_word is None) or check == "tree-mapping":
            if spectrum.sign_word is not None:
                raise ValidationError("sign-word spectra are not built from a tree mapping")
            report = validate_tree_mapping(system, spectrum.shifts, params["tree_depth"])
            outputs["checks"]["tree_mapping"] = {
                "depth": report.depth, "nodes_checked": report.nodes_checked, "valid": report.valid,
                "first_violation": list(map(str, report.first_violation)) if report.first_violation else None,
                "dai_sun_bound": report.dai_sun_bound, "ambiguous_nodes": report.ambiguous_nodes,
            }
            print(f"🌳 Tree mapping to depth {report.depth}: {'✅' if report.valid else '❌'}")
            if not report.valid:
                self.failures.append(f"tree mapping: {report.first_violation}")

        return outputs

    def _verify_unitarity(self, cfg: RunConfig, spectrum: Spectrum, params: Dict[str, Any]) -> Outputs:
        system = cfg.system
        if spectrum.kind not in (SpectrumKind.CANONICAL, SpectrumKind.SIGN_WORD):
            raise ValidationError("level unitarity needs a canonical or sign-word spectrum")
        level = params["level"] or 3
        word = spectrum.sign_word or SignWord.plus()
        pairs = [compatible_pair_check(system, k, word.sign(k)) for k in range(1, level + 1)]
        level_report = None
        if system.Q(level) <= self.settings.max_matrix_dim:
            measure = level_measure(system, level, self.settings.max_level)
            level_report = level_unitarity(system, level, spectrum.level_points(level), measure,
                                           self.settings.max_level, self.settings.max_matrix_dim)
            level_report.tolerance = self.settings.unitarity_tolerance
        else:
            print(f"⚠️  Level {level} matrix exceeds {self.settings.max_matrix_dim}; level check skipped")

        ok = all(p.passed for p in pairs) and (level_report is None or level_report.passed)
        print(f"🔢 Unitarity up to level {level}: {'✅' if ok else '❌'}")
        if not ok:
            self.failures.append(f"unitarity fails up to level {level}")
        return {
            "compatible_pairs": [p.to_dict() for p in pairs],
            "level": level_report.to_dict() if level_report else None,
        }

    def _verify_completeness(self, cfg: RunConfig, spectrum: Spectrum, params: Dict[str, Any]) -> Outputs:
        if params["level"] is not None:
            cap = cfg.system.Q(params["level"]) - 1
        else:
            cap = self._index_cap(spectrum, params)
        profile = completeness_profile(cfg.system, spectrum, params["xi"], cap, params["K"],
                                       self.settings.threads)
        self._artifact(write_csv(self.run_dir / "completeness.csv", ("xi", "N", "partial_sum"),
                                 profile.rows(), self.run_id))
        for xi, value in zip(profile.xi_samples, profile.final_values):
            print(f"📈 xi={xi}: partial sum {value:.6f}")
        if not (profile.monotone() and profile.within_bound()):
            self.failures.append("completeness profile is not monotone or exceeds 1 + tail")
        return profile.to_dict()

    # ==================== DIMENSIONS ====================

    def _handle_dims_commands(self, cfg: RunConfig, params: Dict[str, Any]) -> Outputs:
        """Entropy and Hausdorff dimension reports of the system"""
        depth = params["depth"]
        tolerance = self.settings.converged_tolerance
        upper = upper_entropy_dim(cfg.system, depth, tolerance)
        lower = hausdorff_support_dim(cfg.system, depth, tolerance)
        print(f"📐 Upper entropy dimension: {upper.value:.9f} ({'exact' if upper.exact else 'sampled'})")
        print(f"📐 Hausdorff dimension of the support: {lower.value:.9f}")
        self._artifact(write_csv(self.run_dir / "prefix_ratios.csv", ("k", "log_Q_over_log_B"),
                                 upper.prefix_samples, self.run_id))
        return {"upper_entropy": upper.to_dict(), "hausdorff_support": lower.to_dict()}

    def _beurling_scales(self, spectrum: Spectrum, points: List[int], params: Dict[str, Any]) -> Tuple[List[int], str]:
        span = points[-1] - points[0]
        scales = params["scales"]
        if isinstance(scales, list):
            return sorted(set(scales)), "custom"
        if scales == "natural":
            natural = [h for h in spectrum.natural_scales(self.settings.max_level if params["level"] is None
                                                          else params["level"]) if h <= span]
            if natural:
                return natural, "natural"
            print("⚠️  No natural scales for this spectrum, using dyadic scales")
        return dyadic_scales(span, params["max_scales"]), "dyadic"

    def _handle_beurling_commands(self, cfg: RunConfig, params: Dict[str, Any]) -> Outputs:
        """Counting estimate of the Beurling dimension (plus the formula when available)"""
        spectrum = self._build_spectrum(cfg, params)
        natural = spectrum.natural_scales(self.settings.max_level)
        if params["level"] is None and params["scales"] == "natural" and natural:
            # Frequencies far above the largest scale sit alone in every window
            cap = self._index_cap(spectrum, params)
            points = spectrum.points_within(cap, natural[-1] << NATURAL_CUTOFF_BITS)
            view = f"indices 0..{cap} below the natural cutoff"
        else:
            points, view = self._spectrum_points(spectrum, params)
        ordered = sorted(points)
        scales, source = self._beurling_scales(spectrum, ordered, params)
        estimate = beurling_estimate(ordered, scales, self.settings.headline_fraction, source,
                                     self.settings.threads)
        print(f"📊 Beurling estimate on {view}: {estimate.value:.6f} "
              f"(slope {estimate.slope if estimate.slope is None else round(estimate.slope, 6)})")
        self._artifact(write_csv(self.run_dir / "beurling.csv", ("h", "max_count", "log_ratio"),
                                 estimate.rows(), self.run_id))
        outputs: Outputs = {"estimate": estimate.to_dict(), "view": view}

        formula = self._regular_formula(cfg, spectrum)
        if formula is not None:
            outputs["formula"] = formula.to_dict()
            print(f"📊 Formula value: {formula.value:.6f}")

        if spectrum.kind == SpectrumKind.LACUNARY and params["level"] is None:
            report = lacunary_check(points, 2)
            outputs["lacunary"] = {"lacunary": report.lacunary, "checked": report.checked,
                                   "first_violation": report.first_violation}
        return outputs

    def _regular_formula(self, cfg: RunConfig, spectrum: Spectrum):
        system = cfg.system
        if spectrum.thinned is not None and spectrum.kind == SpectrumKind.INTERMEDIATE:
            data = spectrum.thinned.integer_moran_data()
            return beurling_formula_ims(data, data.depth, self.settings.headline_fraction)
        if spectrum.kind in (SpectrumKind.CANONICAL, SpectrumKind.SIGN_WORD):
            depth = self.settings.validation_depth
            data = IntegerMoranData.from_system(system, [system.q(k) for k in range(1, depth + 1)],
                                                system.periodic_structure())
            return beurling_formula_ims(data, depth, self.settings.headline_fraction)
        return None

    def _handle_entropy_commands(self, cfg: RunConfig, params: Dict[str, Any]) -> Outputs:
        """Dyadic-partition entropy of mu_level"""
        measure = level_measure(cfg.system, params["level"], self.settings.max_level)
        rows = entropy_estimate(measure, params["dyadic_levels"], self.settings.entropy_margin)
        for row in rows:
            print(f"🔬 n={row.n}: H_n/(n log 2) = {row.ratio:.6f}")
        self._artifact(write_csv(self.run_dir / "entropy.csv", ("n", "entropy", "ratio", "cells"),
                                 ((r.n, r.entropy, r.ratio, r.occupied_cells) for r in rows),
                                 self.run_id))
        return {"level": params["level"],
                "rows": [{"n": r.n, "ratio": r.ratio, "entropy": r.entropy} for r in rows]}

    # ==================== FOURIER ====================

    def _handle_fourier_commands(self, cfg: RunConfig, params: Dict[str, Any]) -> Outputs:
        """|mu^(B_k)| probe with the scaled-support bound"""
        probe = fourier_nondecay_probe(cfg.system, params["kmax"], params["K_extra"])
        bounds = [scaled_support_max(cfg.system, p.k, params["K_extra"]) for p in probe]
        self._artifact(write_csv(
            self.run_dir / "fourier_probe.csv", ("k", "magnitude", "tail_bound", "support_bound"),
            ((p.k, p.magnitude, p.tail_bound, float(s.bound)) for p, s in zip(probe, bounds)),
            self.run_id,
        ))
        magnitudes = [p.magnitude for p in probe]
        below = all(s.below_one for s in bounds)
        print(f"🌊 |mu^(B_k)| for k <= {params['kmax']}: min {min(magnitudes):.9f}, "
              f"max {max(magnitudes):.9f}; support bound < 1: {'✅' if below else '❌'}")
        if not below:
            self.failures.append("scaled support bound is not below 1")
        return {"min_magnitude": min(magnitudes), "max_magnitude": max(magnitudes),
                "support_bound_below_one": below}

    # ==================== INTEGER MORAN SETS ====================

    def _handle_ims_commands(self, cfg: RunConfig, params: Dict[str, Any]) -> Outputs:
        """Integer Moran set, its formula value and counting estimate"""
        depth = params["depth"]
        data = IntegerMoranData.from_specs(
            SequenceSpec.from_dict(params["n"], "parameters.n"),
            SequenceSpec.from_dict(params["m"], "parameters.m"),
            SequenceSpec.from_dict(params["t"], "parameters.t"),
            depth,
        )
        points = integer_moran_set(data, depth)
        self._artifact(write_int_list(self.run_dir / "ims.txt", points, self.run_id))
        formula = beurling_formula_ims(data, depth, self.settings.headline_fraction)
        outputs: Outputs = {"count": len(points), "formula": formula.to_dict()}
        scales = [h for h in natural_scales(data, depth) if h <= points[-1] - points[0]]
        if len(points) >= 2 and scales:
            estimate = beurling_estimate(points, scales, self.settings.headline_fraction, "natural")
            outputs["estimate"] = estimate.to_dict()
            print(f"📊 {len(points)} points: estimate {estimate.value:.6f}, formula {formula.value:.6f}")
        else:
            print(f"📊 {len(points)} points: formula {formula.value:.6f}")
        self._artifact(write_jsonl(self.run_dir / "ims_levels.jsonl",
                                   ({"h": s.h, "count": s.max_count, "ratio": s.log_ratio}
                                    for s in formula.samples),
                                   self.run_id))
        return outputs


def run_command(cfg: RunConfig, settings: Optional[LabSettings] = None) -> ResultRecord:
    """Run one config with a fresh lab"""
    return MoranLab(settings or cfg.limits).run_command(cfg)


def exit_code_for(error: BaseException) -> int:
    """Process exit code for an error raised by a run"""
    if isinstance(error, MoranLabError):
        return error.exit_code
    log_error(f"Unexpected error: {error}")
    return 1
