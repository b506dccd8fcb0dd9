"""Per-OLS amplifier working-point optimization.

Finds, at full spectral load, the booster/pre-amplifier output powers and
the in-line amplifier gains and tilts that homogeneously maximize GSNR
across the band: the objective is ``mean(GSNR) - lambda_flat * (max - min)``
evaluated on the twin.  Boosters and pre-amplifiers run in constant output
power mode, in-line amplifiers in constant gain mode.

The search is a deterministic coordinate descent with fixed 0.1 dB
granularity, seeded from characterized loss compensation (gain = span loss,
tilt canceling the first-order SRS tilt), within a fixed twin-evaluation
budget.
"""

from dataclasses import dataclass, replace

import numpy as np

from .edfa import EdfaMode, edfa_apply, realized_gain_db
from .errors import OpticnetError, OptimizationError
from .fiber import span_transfer, srs_exchange_factors
from .nli import nli_span
from .grid import ChannelPlan
from .line import OlsDescriptor, gsnr_db, propagate_ols
from .spectrum import PowerSpectrum
from .topology import OlsPhy
from .units import dbm_to_w, lin_to_db


@dataclass(frozen=True)
class WorkingPointSolution:
    ols_id: str
    operating_points: tuple      # BST, ILA..., PRE
    objective_db: float
    mean_gsnr_db: float
    flatness_db: float           # max - min GSNR across the band

    def __post_init__(self):
        if self.flatness_db < 0:
            raise OptimizationError("flatness must be >= 0")


@dataclass(frozen=True)
class OptimizerConfig:
    lambda_flat: float = 2.0
    # Penalty on output-signal ripple: a line must hand the next OLS the flat
    # comb its working point was designed for.
    lambda_signal_flat: float = 1.0
    step_db: float = 0.1
    tilt_bounds_db: tuple = (-5.0, 5.0)
    eval_budget: int = 2000
    power_scan_db: float = 5.0    # one-sided scan range for power coordinates
    gain_scan_db: float = 1.5     # one-sided scan range for gain/tilt


def span_loss_db(span, plan: ChannelPlan) -> float:
    return float(np.mean(span.total_loss_db(plan)))


def srs_tilt_estimate_db(span, plan: ChannelPlan, launch_w) -> float:
    """Edge-to-edge SRS tilt of one span at the given launch, in dB."""
    factors = srs_exchange_factors(plan, launch_w, span)
    return float(lin_to_db(factors[-1]) - lin_to_db(factors[0]))


def _seed_points(ols: OlsPhy, plan: ChannelPlan, input_per_channel_dbm,
                 config: OptimizerConfig):
    """Loss-compensating seed: nominal 0 dBm/ch launch, spans restored."""
    n = plan.channel_count
    spans = ols.spans
    input_total_dbm = input_per_channel_dbm + lin_to_db(n)
    bst = ols.amps[0]
    pre = ols.amps[-1]
    last_loss_seed = span_loss_db(spans[-1], plan)
    if last_loss_seed > pre.g_max_db:
        raise OptimizationError(
            f"OLS {ols.ols_id}: span {len(spans)} loss {last_loss_seed:.1f} dB "
            f"exceeds {pre.label} maximum gain {pre.g_max_db:.1f} dB")
    pre_target = min(pre.target_p_out_dbm, pre.p_out_max_dbm - 0.5)
    p_lo = max(input_total_dbm + bst.g_min_db,
               pre_target + last_loss_seed - pre.g_max_db)
    p_hi = min(input_total_dbm + bst.g_max_db, bst.p_out_max_dbm - 0.5,
               pre_target + last_loss_seed - pre.g_min_db)
    if p_lo > p_hi:
        raise OptimizationError(
            f"OLS {ols.ols_id}: no feasible booster output power from "
            f"{input_total_dbm:.1f} dBm total input")
    seed_out = float(np.clip(round(np.clip(lin_to_db(n), p_lo, p_hi), 1),
                             p_lo, p_hi))
    points = [bst.operating_point(EdfaMode.CONSTANT_OUTPUT_POWER,
                                  p_out_dbm=seed_out)]
    launch_w = np.full(n, dbm_to_w(seed_out) / n)
    for i, span in enumerate(spans[:-1]):
        loss = span_loss_db(span, plan)
        dev = ols.amps[i + 1]
        if loss > dev.g_max_db:
            raise OptimizationError(
                f"OLS {ols.ols_id}: span {i + 1} loss {loss:.1f} dB exceeds "
                f"{dev.label} maximum gain {dev.g_max_db:.1f} dB")
        gain = float(np.clip(round(loss, 1), dev.g_min_db, dev.g_max_db))
        tilt = -srs_tilt_estimate_db(span, plan, launch_w)
        tilt = float(np.clip(round(tilt, 1), *config.tilt_bounds_db))
        points.append(dev.operating_point(EdfaMode.CONSTANT_GAIN,
                                          gain_db=gain, tilt_db=tilt))
    points.append(pre.operating_point(EdfaMode.CONSTANT_OUTPUT_POWER,
                                      p_out_dbm=pre_target))
    return points


class _Evaluator:
    def __init__(self, ols: OlsPhy, plan: ChannelPlan, input_dbm_per_channel,
                 config: OptimizerConfig):
        self.ols = ols
        self.input = PowerSpectrum.flat(plan, input_dbm_per_channel)
        self.config = config
        self.evals = 0

    def __call__(self, points) -> tuple:
        """(objective, mean, flatness); -inf objective when infeasible."""
        self.evals += 1
        descriptor = OlsDescriptor(
            self.ols.ols_id, booster=points[0], spans=self.ols.spans,
            ilas=tuple(points[1:-1]), preamp=points[-1],
            endpoint_a=self.ols.endpoint_a, endpoint_b=self.ols.endpoint_b)
        try:
            out = propagate_ols(self.input, descriptor)
            gsnr = gsnr_db(out)
        except OpticnetError:
            return float("-inf"), float("nan"), float("nan")
        mean = float(np.mean(gsnr))
        flatness = float(np.max(gsnr) - np.min(gsnr))
        ripple = float(np.ptp(lin_to_db(out.signal_w)))
        objective = mean - self.config.lambda_flat * flatness \
            - self.config.lambda_signal_flat * ripple
        return objective, mean, flatness


def _coordinate_values(op, field_name, dev, config):
    """Candidate values for one scalar coordinate, bounds respected."""
    step = config.step_db
    current = getattr(op, field_name)
    if field_name == "p_out_dbm":
        span_range = config.power_scan_db
        lo, hi = -np.inf, dev.p_out_max_dbm
    elif field_name == "gain_db":
        span_range = config.gain_scan_db
        lo, hi = dev.g_min_db, dev.g_max_db
    else:
        span_range = config.gain_scan_db
        lo, hi = config.tilt_bounds_db
    k = int(round(span_range / step))
    values = current + step * np.arange(-k, k + 1)
    values = np.round(values, 4)
    return [float(v) for v in values
            if lo <= v <= hi and abs(v - current) > 1e-9]


def optimize_ols(ols: OlsPhy, plan: ChannelPlan,
                 input_per_channel_dbm: float = -9.0,
                 config: OptimizerConfig = OptimizerConfig()) -> WorkingPointSolution:
    """Search the amplifier working point maximizing homogeneous GSNR.

    ``input_per_channel_dbm`` is the per-channel power arriving at the
    booster input (transmitter power minus the add-path loss).  The result
    never falls below the loss-compensation seed objective and always
    respects device limits.
    """
    if not ols.spans:
        raise OptimizationError(f"OLS {ols.ols_id}: no spans to optimize")
    points = _seed_points(ols, plan, input_per_channel_dbm, config)
    evaluate = _Evaluator(ols, plan, input_per_channel_dbm, config)
    best, best_mean, best_flat = evaluate(points)
    if not np.isfinite(best):
        raise OptimizationError(
            f"OLS {ols.ols_id}: loss-compensation seed is infeasible")

    # The pre-amplifier output is a drop-path requirement (receiver launch),
    # not a degree of freedom: less pre-amp gain always means less ASE, so a
    # free coordinate would just collapse to the minimum.  It stays pinned to
    # the device target.
    coordinates = []
    for index in range(len(points) - 1):
        if points[index].mode is EdfaMode.CONSTANT_OUTPUT_POWER:
            coordinates.append((index, "p_out_dbm"))
        else:
            coordinates.append((index, "gain_db"))
            coordinates.append((index, "tilt_db"))

    improved = True
    while improved and evaluate.evals < config.eval_budget:
        improved = False
        for index, field_name in coordinates:
            dev = ols.amps[index]
            values = _coordinate_values(points[index], field_name, dev, config)
            scored = []
            for value in values:
                if evaluate.evals >= config.eval_budget:
                    break
                trial = list(points)
                trial[index] = replace(points[index], **{field_name: value})
                scored.append((*evaluate(trial), trial))
            if not scored:
                continue
            obj, mean, flat, trial = max(scored, key=lambda c: c[0])
            if obj > best + 1e-9:
                best, best_mean, best_flat = obj, mean, flat
                points = trial
                improved = True
    return WorkingPointSolution(ols_id=ols.ols_id,
                                operating_points=tuple(points),
                                objective_db=best, mean_gsnr_db=best_mean,
                                flatness_db=best_flat)


def frozen_gain_points(ols: OlsPhy, points, input_spectrum: PowerSpectrum):
    """Rewrite power-mode points as the constant gains they realize.

    Used to compare spectral-load scenarios at fixed device settings: a
    constant-output-power amplifier would renormalize under partial load,
    which is not "the same operating point".
    """
    frozen = []
    current = input_spectrum
    bw = input_spectrum.plan.symbol_rate_baud
    for index, op in enumerate(points):
        gain = realized_gain_db(current, op)
        frozen.append(replace(op, mode=EdfaMode.CONSTANT_GAIN, gain_db=gain,
                              g_min_db=min(op.g_min_db, gain),
                              g_max_db=max(op.g_max_db, gain)))
        current = edfa_apply(current, frozen[-1], bw)
        if index < len(ols.spans):
            current = current.with_added_nli(nli_span(current,
                                                      ols.spans[index]))
            current = span_transfer(current, ols.spans[index])
    return tuple(frozen)


def apply_working_point(solution: WorkingPointSolution, olc) -> dict:
    """Push a solution to the line controller; the OLS becomes READY.

    Every amplifier must acknowledge its setting; a rejection keeps the OLS
    NOT_READY and surfaces the offending amplifier.
    """
    acks = {}
    for index, op in enumerate(solution.operating_points):
        acks[olc.amp_label(index)] = olc.configure_amp(index, op)
    olc.mark_ready()
    return acks
