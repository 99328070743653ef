"""
第二阶段：动态子阵列下的混合波束成形（交替最小化）。

目标为 Σ_k ‖F̃_k − F_RF F_BBk‖_F²，约束为：
- F_RF 每个非零元单位模；
- 每行恰有一个非零元（每根天线只连一条 RF 链）；
- 每列至少一个非零元（每条 RF 链至少连一根天线）。

模拟部分先逐天线选择最优 RF 链（不考虑“每列非空”），若出现空链，则在
可迁移天线与空链之间构造迁移代价矩阵，用 KM 算法选出恰好 N_RF^0 次迁移；
数字部分为最小二乘闭式解。迭代结束后按每用户功率 P_k 归一化。
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, replace

import numpy as np

from .assignment import AssignmentProblem, solve_unbalanced
from .errors import (
    ConfigError,
    ConstraintViolationError,
    DegenerateHybridError,
    InfeasibleReallocationError,
)
from .types import SystemConfig

DEFAULT_TOL = 1e-4
DEFAULT_MAX_ITERS = 200
# 动态方法的初始划分：随机可行划分，或与固定子阵列相同的连续等长块。
INIT_MODES = ("random", "block")
UNIT_MODULUS_TOL = 1e-12
# 归一化前 ‖F_RF F_BBk‖_F 低于该值视为退化。
VANISHING_NORM = 1e-12


@dataclass(frozen=True, eq=False)
class AnalogBeamformer:
    """模拟波束成形矩阵及其天线划分。"""

    matrix: np.ndarray
    chain_of_antenna: np.ndarray
    antennas_of_chain: tuple[tuple[int, ...], ...]

    @classmethod
    def from_chains(
        cls,
        chain_of_antenna: Sequence[int] | np.ndarray,
        phases: np.ndarray,
        n_rf: int,
    ) -> AnalogBeamformer:
        chain = np.asarray(chain_of_antenna, dtype=int).copy()
        n_tx = chain.size
        mat = np.zeros((n_tx, n_rf), dtype=complex)
        mat[np.arange(n_tx), chain] = phases
        groups = tuple(tuple(int(i) for i in np.flatnonzero(chain == c)) for c in range(n_rf))
        return cls(matrix=mat, chain_of_antenna=chain, antennas_of_chain=groups)

    @property
    def n_tx(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def n_rf(self) -> int:
        return int(self.matrix.shape[1])

    @property
    def phases(self) -> np.ndarray:
        return self.matrix[np.arange(self.n_tx), self.chain_of_antenna]

    def chain_sizes(self) -> np.ndarray:
        return np.bincount(self.chain_of_antenna, minlength=self.n_rf)

    def empty_chains(self) -> tuple[int, ...]:
        return tuple(int(c) for c in np.flatnonzero(self.chain_sizes() == 0))

    def check(self) -> None:
        """校验单位模、每行一个非零元、每列非空三项约束及内部一致性。"""
        nz = self.matrix != 0
        per_row = nz.sum(axis=1)
        if np.any(per_row != 1):
            bad = int(np.flatnonzero(per_row != 1)[0])
            raise ConstraintViolationError(
                f"antenna {bad} has {int(per_row[bad])} nonzero entries (expected 1)"
            )
        mags = np.abs(self.matrix[nz])
        if np.any(np.abs(mags - 1.0) > UNIT_MODULUS_TOL):
            raise ConstraintViolationError("analog entry violates the unit-modulus constraint")
        per_col = nz.sum(axis=0)
        if np.any(per_col == 0):
            empty = ", ".join(str(int(c)) for c in np.flatnonzero(per_col == 0))
            raise ConstraintViolationError(f"RF chain(s) connected to no antenna: {empty}")
        if not np.array_equal(np.argmax(nz, axis=1), self.chain_of_antenna):
            raise ConstraintViolationError("chain_of_antenna disagrees with the matrix support")
        for c, group in enumerate(self.antennas_of_chain):
            if tuple(np.flatnonzero(self.chain_of_antenna == c)) != tuple(group):
                raise ConstraintViolationError(f"antennas_of_chain[{c}] is inconsistent")


@dataclass(frozen=True, eq=False)
class ReallocationPlan:
    """迁移代价矩阵 G 及最终选中的迁移。"""

    empty_chains: tuple[int, ...]
    movable_antennas: tuple[int, ...]
    cost: np.ndarray
    chosen_moves: tuple[tuple[int, int], ...] = ()
    # 因源链被清空而删除 G 的行并重新求解的次数。
    re_solves: int = 0


@dataclass(frozen=True, eq=False)
class AnalogStep:
    """一次模拟更新：逐天线候选解、迁移方案（若有）与最终结果。"""

    analog: AnalogBeamformer
    candidate: AnalogBeamformer
    plan: ReallocationPlan | None

    @property
    def n_rf0(self) -> int:
        return 0 if self.plan is None else len(self.plan.empty_chains)

    @property
    def re_solves(self) -> int:
        return 0 if self.plan is None else self.plan.re_solves


@dataclass(frozen=True)
class IterationRecord:
    """交替迭代的一步：模拟更新后误差 delta1、数字更新后误差 delta2。"""

    iteration: int
    delta1: float
    delta2: float
    n_rf0: int
    re_solves: int = 0
    kept_previous: bool = False


@dataclass(frozen=True, eq=False)
class HybridSolution:
    """第二阶段（或第三阶段）输出。"""

    analog: AnalogBeamformer
    digital: tuple[np.ndarray, ...]
    # 归一化前的最终近似误差。
    approximation_error: float
    trace: tuple[IterationRecord, ...] = ()
    initial_error: float = math.nan
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.trace)

    def overall(self) -> list[np.ndarray]:
        """每个用户的整体波束成形矩阵 F_RF F_BBk。"""
        return [self.analog.matrix @ d for d in self.digital]


def _stack(mats: Sequence[np.ndarray]) -> np.ndarray:
    return np.hstack([np.asarray(m) for m in mats])


def correlation(targets: Sequence[np.ndarray], digitals: Sequence[np.ndarray]) -> np.ndarray:
    """A(i, l) = Σ_k F̃_k(i,:) F_BBk(l,:)^H，形状 N_T x N_RF。"""
    return _stack(targets) @ _stack(digitals).conj().T


def _row_energy(digitals: Sequence[np.ndarray]) -> np.ndarray:
    d = _stack(digitals)
    return np.sum(np.abs(d) ** 2, axis=1)


def optimal_phase(a: np.ndarray) -> np.ndarray:
    """A/|A|；A = 0 时任意单位模值均最优，取 1。"""
    a = np.asarray(a, dtype=complex)
    mag = np.abs(a)
    out = np.ones_like(a)
    nz = mag > 0
    out[nz] = a[nz] / mag[nz]
    return out


def selection_scores(
    targets: Sequence[np.ndarray],
    digitals: Sequence[np.ndarray],
) -> tuple[np.ndarray, np.ndarray]:
    """返回 (score, A)，score(i, l) = Σ_k ‖F_BBk(l,:)‖² − 2|A(i, l)|。"""
    a = correlation(targets, digitals)
    score = _row_energy(digitals)[None, :] - 2.0 * np.abs(a)
    return score, a


def selection_objective(
    antenna: int,
    chain: int,
    phase: complex,
    digitals: Sequence[np.ndarray],
    targets: Sequence[np.ndarray],
) -> float:
    """Σ_k ‖F̃_k(i,:) − phase · F_BBk(l,:)‖²。"""
    total = 0.0
    for t, d in zip(targets, digitals):
        diff = t[antenna, :] - phase * d[chain, :]
        total += float(np.real(np.vdot(diff, diff)))
    return total


def select_chain_per_antenna(
    targets: Sequence[np.ndarray],
    digitals: Sequence[np.ndarray],
) -> tuple[np.ndarray, AnalogBeamformer]:
    """逐天线选取使目标最小的 RF 链；此时不保证每条链非空。"""
    n_rf = int(digitals[0].shape[0])
    score, a = selection_scores(targets, digitals)
    # argmin 在并列时返回最小下标。
    chain = np.argmin(score, axis=1)
    phases = optimal_phase(a[np.arange(chain.size), chain])
    candidate = AnalogBeamformer.from_chains(chain, phases, n_rf)
    return candidate.chain_of_antenna.copy(), candidate


def build_reallocation_cost(
    candidate: AnalogBeamformer,
    targets: Sequence[np.ndarray],
    digitals: Sequence[np.ndarray],
) -> ReallocationPlan:
    """构造迁移代价矩阵 G(i, j) = f_{a_i}(l_j) − f_{a_i}(l*_{a_i})。"""
    sizes = candidate.chain_sizes()
    empty = candidate.empty_chains()
    # 仅连接一根天线的链不参与迁移，避免其被清空。
    movable = tuple(
        a for c in range(candidate.n_rf) if sizes[c] > 1 for a in candidate.antennas_of_chain[c]
    )
    if len(movable) < len(empty):
        raise InfeasibleReallocationError(
            f"{len(empty)} empty RF chain(s) but only {len(movable)} movable antenna(s)"
        )

    score, _a = selection_scores(targets, digitals)
    rows = np.asarray(movable, dtype=int)
    if rows.size and empty:
        own = score[rows, candidate.chain_of_antenna[rows]]
        g = score[np.ix_(rows, np.asarray(empty, dtype=int))] - own[:, None]
    else:
        g = np.zeros((rows.size, len(empty)))
    return ReallocationPlan(empty_chains=empty, movable_antennas=movable, cost=g)


def apply_reallocation(
    candidate: AnalogBeamformer,
    plan: ReallocationPlan,
    targets: Sequence[np.ndarray],
    digitals: Sequence[np.ndarray],
) -> tuple[AnalogBeamformer, ReallocationPlan]:
    """
    按 KM 解执行恰好 N_RF^0 次迁移。

    若某条源链的天线被全部迁走，则保留其中迁移代价最大的那根天线，
    删除其在 G 中的行后重新求解。每次重解删去一行，最多重解 M 次。
    """
    n0 = len(plan.empty_chains)
    if n0 == 0:
        return candidate, plan

    a = correlation(targets, digitals)
    base_chain = candidate.chain_of_antenna
    rows = list(range(len(plan.movable_antennas)))
    re_solves = 0

    while True:
        if len(rows) < n0:
            raise InfeasibleReallocationError(
                f"{n0} empty RF chain(s) but only {len(rows)} movable antenna(s) remain"
            )
        result = solve_unbalanced(AssignmentProblem(plan.cost[rows, :]))

        chain = base_chain.copy()
        remaining = {
            c: set(candidate.antennas_of_chain[c]) for c in range(candidate.n_rf)
        }
        worst: dict[int, tuple[float, int]] = {}
        moves: list[tuple[int, int]] = []
        flagged: int | None = None
        for j, x in enumerate(result.row_of_column):
            row = rows[x]
            antenna = plan.movable_antennas[row]
            src = int(base_chain[antenna])
            target = plan.empty_chains[j]
            remaining[src].discard(antenna)
            chain[antenna] = target
            moves.append((antenna, target))
            g = float(plan.cost[row, j])
            if src not in worst or worst[src][0] < g:
                worst[src] = (g, row)
            if not remaining[src]:
                flagged = worst[src][1]
                break

        if flagged is None:
            break
        rows.remove(flagged)
        re_solves += 1

    phases = candidate.phases.copy()
    for antenna, target in moves:
        phases[antenna] = optimal_phase(a[antenna, target])
    analog = AnalogBeamformer.from_chains(chain, phases, candidate.n_rf)
    return analog, replace(plan, chosen_moves=tuple(moves), re_solves=re_solves)


def km_analog_step(
    targets: Sequence[np.ndarray],
    digitals: Sequence[np.ndarray],
) -> AnalogStep:
    """KM 辅助的动态模拟波束成形更新，附带中间结果。"""
    _chain, candidate = select_chain_per_antenna(targets, digitals)
    if not candidate.empty_chains():
        return AnalogStep(analog=candidate, candidate=candidate, plan=None)
    plan = build_reallocation_cost(candidate, targets, digitals)
    analog, plan = apply_reallocation(candidate, plan, targets, digitals)
    return AnalogStep(analog=analog, candidate=candidate, plan=plan)


def km_analog_update(
    targets: Sequence[np.ndarray],
    digitals: Sequence[np.ndarray],
) -> AnalogBeamformer:
    """KM 辅助的动态模拟波束成形更新。"""
    return km_analog_step(targets, digitals).analog


def digital_ls_update(analog: AnalogBeamformer, targets: Sequence[np.ndarray]) -> list[np.ndarray]:
    """F_BBk = (F_RF^H F_RF)^{-1} F_RF^H F̃_k；F_RF^H F_RF = diag(|S_l|)。"""
    sizes = analog.chain_sizes()
    if np.any(sizes == 0):
        raise ConstraintViolationError("least-squares update needs every RF chain connected")
    fh = analog.matrix.conj().T
    scale = 1.0 / sizes.astype(float)
    return [(fh @ t) * scale[:, None] for t in targets]


def approximation_error(
    analog: AnalogBeamformer,
    digitals: Sequence[np.ndarray],
    targets: Sequence[np.ndarray],
) -> float:
    """Σ_k ‖F̃_k − F_RF F_BBk‖_F²。"""
    total = 0.0
    for t, d in zip(targets, digitals):
        r = t - analog.matrix @ d
        total += float(np.real(np.vdot(r, r)))
    return total


def random_analog(n_tx: int, n_rf: int, rng: np.random.Generator) -> AnalogBeamformer:
    """随机生成满足全部约束的模拟波束成形矩阵。"""
    if n_rf > n_tx:
        raise ConfigError(f"n_rf must not exceed n_tx ({n_rf} > {n_tx})", key="n_rf")
    chain = np.empty(n_tx, dtype=int)
    # 先为每条链分配一根互不相同的天线，其余天线均匀随机分配。
    perm = rng.permutation(n_tx)
    chain[perm[:n_rf]] = np.arange(n_rf)
    chain[perm[n_rf:]] = rng.integers(0, n_rf, n_tx - n_rf)
    phases = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, n_tx))
    return AnalogBeamformer.from_chains(chain, phases, n_rf)


def normalize_digitals(
    analog: AnalogBeamformer,
    digitals: Sequence[np.ndarray],
    user_powers: Sequence[float],
    *,
    error: type[DegenerateHybridError] = DegenerateHybridError,
) -> tuple[np.ndarray, ...]:
    """
    按 √P_k / ‖F_RF F_BBk‖_F 缩放；P_k = 0 的用户输出零矩阵。

    第二阶段与零空间投影共用本函数；范数过小时抛出 `error`，
    投影阶段传入 `DegenerateProjectionError`。
    """
    out: list[np.ndarray] = []
    for k, (d, p) in enumerate(zip(digitals, user_powers)):
        if p <= 0:
            out.append(np.zeros_like(d))
            continue
        norm = float(np.linalg.norm(analog.matrix @ d))
        if norm < VANISHING_NORM:
            raise error(f"hybrid beamformer of user {k} vanished before normalization", user=k)
        out.append(d * (math.sqrt(p) / norm))
    return tuple(out)


def refresh_phases(
    analog: AnalogBeamformer,
    targets: Sequence[np.ndarray],
    digitals: Sequence[np.ndarray],
) -> AnalogBeamformer:
    """划分不变，每根天线取 A(i, l_i)/|A(i, l_i)|。"""
    a = correlation(targets, digitals)
    chain = analog.chain_of_antenna
    return AnalogBeamformer.from_chains(
        chain, optimal_phase(a[np.arange(chain.size), chain]), analog.n_rf
    )


def _alternate(
    targets: Sequence[np.ndarray],
    user_powers: Sequence[float],
    analog: AnalogBeamformer,
    analog_step: Callable[[Sequence[np.ndarray], Sequence[np.ndarray]], AnalogStep],
    *,
    tol: float,
    max_iters: int,
) -> HybridSolution:
    digitals = digital_ls_update(analog, targets)
    initial = approximation_error(analog, digitals, targets)
    prev = initial
    trace: list[IterationRecord] = []
    converged = False

    for it in range(1, max_iters + 1):
        step = analog_step(targets, digitals)
        updated = step.analog
        delta1 = approximation_error(updated, digitals, targets)
        kept = False
        if step.plan is not None:
            # 迁移后的误差高于在当前划分上只更新相位时，保留当前划分。
            held = refresh_phases(analog, targets, digitals)
            held_error = approximation_error(held, digitals, targets)
            if held_error < delta1:
                updated, delta1, kept = held, held_error, True
        analog = updated
        digitals = digital_ls_update(analog, targets)
        delta2 = approximation_error(analog, digitals, targets)
        trace.append(
            IterationRecord(
                iteration=it,
                delta1=delta1,
                delta2=delta2,
                n_rf0=step.n_rf0,
                re_solves=step.re_solves,
                kept_previous=kept,
            )
        )
        prev = delta2
        if abs(delta1 - delta2) < tol:
            converged = True
            break

    return HybridSolution(
        analog=analog,
        digital=normalize_digitals(analog, digitals, user_powers),
        approximation_error=prev,
        trace=tuple(trace),
        initial_error=initial,
        converged=converged,
    )


def alternate_stage2(
    targets: Sequence[np.ndarray],
    user_powers: Sequence[float],
    cfg: SystemConfig,
    *,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    rng: np.random.Generator,
    init: str = "random",
) -> HybridSolution:
    """
    动态子阵列交替最小化：KM 模拟更新与最小二乘数字更新交替进行。

    init="block" 时从固定子阵列的连续等长块出发，相位的抽取方式与
    `fixed_subarray_stage2` 相同，同一随机流下两者起点一致。
    """
    if init == "random":
        analog = random_analog(cfg.n_tx, cfg.n_rf, rng)
    elif init == "block":
        analog = block_analog(cfg.n_tx, cfg.n_rf, rng)
    else:
        raise ConfigError(
            f"unknown dynamic init: {init} (expected {', '.join(INIT_MODES)})", key="dynamic_init"
        )
    return _alternate(
        targets, user_powers, analog, km_analog_step, tol=tol, max_iters=max_iters
    )


def fixed_partition(n_tx: int, n_rf: int) -> np.ndarray:
    """固定子阵列：连续等长块，天线 i 连到链 i // (N_T/N_RF)。"""
    if n_tx % n_rf:
        raise ConfigError(
            f"fixed subarrays need n_tx divisible by n_rf ({n_tx} % {n_rf} != 0)", key="n_tx"
        )
    return np.arange(n_tx) // (n_tx // n_rf)


def block_analog(
    n_tx: int, n_rf: int, rng: np.random.Generator | None = None
) -> AnalogBeamformer:
    """连续等长块划分；rng 为 None 时相位全为 1，否则在单位圆上均匀抽取。"""
    chain = fixed_partition(n_tx, n_rf)
    if rng is None:
        phases = np.ones(n_tx, dtype=complex)
    else:
        phases = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, n_tx))
    return AnalogBeamformer.from_chains(chain, phases, n_rf)


def fixed_subarray_stage2(
    targets: Sequence[np.ndarray],
    user_powers: Sequence[float],
    cfg: SystemConfig,
    *,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    rng: np.random.Generator | None = None,
) -> HybridSolution:
    """固定子阵列基线：划分不变，只更新相位与数字部分。"""
    analog = block_analog(cfg.n_tx, cfg.n_rf, rng)
    start = analog

    def fixed_step(tg: Sequence[np.ndarray], dg: Sequence[np.ndarray]) -> AnalogStep:
        new = refresh_phases(start, tg, dg)
        return AnalogStep(analog=new, candidate=new, plan=None)

    return _alternate(targets, user_powers, analog, fixed_step, tol=tol, max_iters=max_iters)


def write_trace_csv(path: str, trace: Sequence[IterationRecord]) -> None:
    """写出迭代轨迹：iter, delta1, delta2, n_rf0, re_solves, kept_previous。"""
    lines = ["iter,delta1,delta2,n_rf0,re_solves,kept_previous"]
    for r in trace:
        lines.append(
            f"{r.iteration},{r.delta1:.17g},{r.delta2:.17g},{r.n_rf0},"
            f"{r.re_solves},{int(r.kept_previous)}"
        )
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
