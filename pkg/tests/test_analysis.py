"""Path diagnostics: upstream jumps, stream appearance times, maxima,
and the deterministic property checkers."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from streamwalk import InteractionKernel, WalkParameters, log_from_path, run_walk
from streamwalk import analysis as A
from streamwalk.analysis import Verdict


def params(alpha=0.8, L=2, **kw):
    return WalkParameters(alpha=alpha, beta=1.0, confinement=L, **kw)


@pytest.fixture(scope="module")
def sim_log():
    return run_walk(params(seed=5), 50_000, record_interval=1)


class TestUpstreamJumps:
    def test_single_jump_example(self):
        log = log_from_path([0, 1, 2, 1], params())
        jumps = A.upstream_jumps(log, 2)
        assert len(jumps) == 1
        j = jumps[0]
        assert (j.n, j.position) == (2, 2)
        assert j.intensity == pytest.approx(0.2, abs=1e-15)

    def test_monotone_path_has_none(self):
        log = log_from_path([0, 1, 2, 3], params())
        assert A.upstream_jumps(log, 2) == []

    def test_zero_drift_is_never_upstream(self):
        # a kernel with zero coefficient makes every drift exactly zero
        p = WalkParameters(alpha=0.0, kernel=InteractionKernel((0.0,)), confinement=2)
        log = log_from_path([0, 1, 2, 1, 2, 3, 2, 1], p)
        assert np.all(log.deltas == 0.0)
        assert A.upstream_jumps(log, 2) == []

    def test_requires_full_recording(self):
        log = run_walk(params(seed=1), 100, record_interval=0)
        with pytest.raises(ValueError):
            A.upstream_jumps(log, 2)


class TestFirstUpstreamExceeding:
    def test_examples(self):
        log = log_from_path([0, 1, 2, 1], params())
        assert A.first_upstream_exceeding(log, 2, 0.1) == 2
        assert A.first_upstream_exceeding(log, 2, 0.5) is None

    def test_empty_log(self):
        log = log_from_path([0], params())
        assert A.first_upstream_exceeding(log, 2, 0.1) is None


class TestFirstStreamAppearance:
    def test_example(self):
        log = log_from_path([0, 1, 2, 3, 2], params())
        # Delta(1,1) = 1 >= gamma^(1*2) * M = 0.25
        assert A.first_stream_appearance(log, 2, M=1.0, gamma=0.5, side="+") == 1

    def test_zero_drift_path_has_none(self):
        p = WalkParameters(alpha=0.0, kernel=InteractionKernel((0.0,)), confinement=2)
        log = log_from_path([0, 1, 2, 1, 2, 1], p)
        assert A.first_stream_appearance(log, 2, M=0.5, gamma=0.5) is None

    def test_monotone_in_threshold(self, sim_log):
        times = [
            A.first_stream_appearance(sim_log, 2, M=m, gamma=0.5)
            for m in (0.5, 1.0, 2.0, 4.0)
        ]
        present = [t for t in times if t is not None]
        assert present == sorted(present)
        # None (no appearance) only ever follows finite times
        if None in times:
            assert times.index(None) == len(present)

    def test_negative_side_mirrors(self, sim_log):
        t = A.first_stream_appearance(sim_log, 2, M=1.0, gamma=0.5, side="-")
        if t is not None:
            hit = any(
                A.delta_series(sim_log, 2 + 1 - j)[t] <= -(0.5 ** (2 * j)) * 1.0
                for j in (1, 2)
            )
            assert hit

    def test_validation(self, sim_log):
        with pytest.raises(ValueError):
            A.first_stream_appearance(sim_log, 2, M=0.0, gamma=0.5)
        with pytest.raises(ValueError):
            A.first_stream_appearance(sim_log, 2, M=1.0, gamma=-1.0)
        with pytest.raises(ValueError):
            A.first_stream_appearance(sim_log, 2, M=1.0, gamma=0.5, side="x")


class TestMaxInteriorStream:
    def test_fresh_and_example(self):
        log = log_from_path([0, 1, 2, 3, 2], params())
        rep = A.max_interior_stream(log, 2)
        assert rep.max_abs[0] == 0.0
        assert rep.ns[-1] == 4
        assert rep.max_abs[-1] == pytest.approx(1.8, abs=1e-12)  # |-1-alpha|
        assert rep.argmax_edge[-1] == 2

    def test_running_max_nondecreasing(self, sim_log):
        rep = A.max_interior_stream(sim_log, 2)
        assert np.all(np.diff(rep.running_max) >= 0)

    def test_thinned_log_matches_full_replay(self):
        p = params(seed=33)
        full = run_walk(p, 2000, record_interval=1)
        thin = run_walk(p, 2000, record_interval=0)
        rep_full = A.max_interior_stream(full, 2)
        rep_thin = A.max_interior_stream(thin, 2)
        for n, v in zip(rep_thin.ns, rep_thin.max_abs):
            assert v == rep_full.max_abs[n]


class TestStreamLipschitz:
    def test_holds_on_confined_run(self, sim_log):
        rep = A.check_stream_lipschitz(sim_log, 2)
        assert rep.ok and rep.consistency_ok and rep.first_violation is None
        assert rep.pairs_checked > 50_000

    def test_holds_on_free_run(self):
        log = run_walk(WalkParameters(alpha=0.6, seed=8), 20_000, record_interval=1)
        assert A.check_stream_lipschitz(log, 2).ok

    def test_tampered_drift_detected(self):
        log = log_from_path([0, 1, 2, 3, 2, 1], params())
        log.deltas[3] += 0.5
        rep = A.check_stream_lipschitz(log, 2)
        assert not rep.ok and not rep.consistency_ok
        assert "drift" in rep.detail

    def test_tampered_local_time_detected(self):
        log = log_from_path([0, 1, 2, 3, 2, 1], params())
        log.final_local_times.increment(2)
        rep = A.check_stream_lipschitz(log, 2)
        assert not rep.ok and not rep.consistency_ok
        assert "local-time" in rep.detail

    def test_tampered_positions_detected(self):
        log = log_from_path([0, 1, 2, 3, 2, 1], params())
        log.positions = log.positions.copy()
        log.positions[2] = 0
        rep = A.check_stream_lipschitz(log, 2)
        assert not rep.ok and "positions" in rep.detail

    def test_recorded_drifts_match_replayed_series(self, sim_log):
        # Delta_n in the log equals Delta(n, X_n) from the path replay
        for m in (0, 17, 999, 31_313):
            x = int(sim_log.positions[m])
            assert sim_log.deltas[m] == A.delta_series(sim_log, x)[m]


class TestConfinement:
    def test_premise_not_met_small_stream(self, sim_log):
        chk = A.check_confinement_property(sim_log, 2, j=1, M=1.5, n1=0, n2=10)
        assert chk.verdict is Verdict.PREMISE_NOT_MET

    def test_premise_requires_m_above_one(self):
        log = log_from_path([0, 1, 2, 3, 2, 3, 2, 3], params())
        chk = A.check_confinement_property(log, 2, j=1, M=0.5, n1=1, n2=3)
        assert chk.verdict is Verdict.PREMISE_NOT_MET

    def test_scan_on_simulated_runs_all_hold(self):
        for seed in range(6):
            log = run_walk(params(seed=seed), 20_000, record_interval=1)
            checks = A.scan_confinement_instances(log, 2)
            assert all(c.verdict is Verdict.HOLDS for c in checks)

    def test_scan_finds_instances_on_enumerated_paths(self):
        import _oracle

        found = held = 0
        for start in range(4):
            dirs = _oracle.leaf_dirs(2, 14, start)
            for r in range(0, dirs.shape[0], 37):
                path = np.concatenate([[start], start + np.cumsum(dirs[r])])
                log = log_from_path(path, params())
                for c in A.scan_confinement_instances(log, 2, time_points=15):
                    found += 1
                    held += c.verdict is Verdict.HOLDS
        assert found > 0 and held == found

    def test_mirrored_side_is_checked_against_left_region(self):
        # strong negative stream at edge j confines to {0,...,j}
        path = [0, 1, 2, 3, 2, 3, 2, 3, 2, 1, 0, 1, 0, 1, 0, 1]
        log = log_from_path(path, params())
        s = A.delta_series(log, 2)
        lo = int(np.argmin(s))
        assert s[lo] < -3  # the bouncing built a strong negative stream
        checks = A.scan_confinement_instances(log, 2)
        sides = {c.side for c in checks}
        assert all(c.verdict is Verdict.HOLDS for c in checks)

    def test_violated_branch_reachable_with_nonlocal_kernel(self):
        # The property leans on the default stencil: with a kernel that
        # reads only next-to-adjacent edges, a far-away bounce builds a
        # strong stream that never steers the walker, so the conclusion
        # fails and the checker must say so.
        k = InteractionKernel((0.0, 1.0))
        p = WalkParameters(alpha=0.0, kernel=k, confinement=2)
        log = log_from_path([0, 1] * 8, p)
        s = A.delta_series(log, 2)  # ell(1) - ell(4) grows with the bounce
        assert s[-1] >= 8
        assert A.upstream_jumps(log, 2) == []
        chk = A.check_confinement_property(log, 2, j=2, M=2.0, n1=10, n2=14)
        assert chk.verdict is Verdict.VIOLATED
        assert chk.first_bad_n is not None

    def test_validation(self, sim_log):
        with pytest.raises(ValueError):
            A.check_confinement_property(sim_log, 2, j=0, M=2.0, n1=0, n2=5)
        with pytest.raises(ValueError):
            A.check_confinement_property(sim_log, 2, j=1, M=2.0, n1=5, n2=5)


class TestProposition:
    def test_vacuous_when_bound_unreached(self, sim_log):
        chk = A.check_proposition_instance(sim_log, 2, eps=0.5, D=1e9)
        assert chk.verdict is Verdict.HOLDS and chk.first_exceed_n is None

    def test_holds_at_moderate_constants(self, sim_log):
        rep = A.max_interior_stream(sim_log, 2)
        assert rep.running_max[-1] >= 3.0
        chk = A.check_proposition_instance(sim_log, 2, eps=0.1, D=3.0)
        assert chk.verdict is Verdict.HOLDS
        assert chk.sigma_n is not None and chk.sigma_n <= chk.first_exceed_n

    def test_violated_by_construction(self, sim_log):
        # eps so large that eps*D exceeds every observed intensity while
        # the stream bound D is still crossed: the implication fails,
        # proving the checker is not a tautology
        rep = A.max_interior_stream(sim_log, 2)
        top = rep.running_max[-1]
        intensities = [u.intensity for u in A.upstream_jumps(sim_log, 2)]
        eps = (max(intensities) * 4) / (top / 2)
        chk = A.check_proposition_instance(sim_log, 2, eps=eps, D=top / 2)
        assert chk.verdict is Verdict.VIOLATED
        assert chk.sigma_n is None

    def test_reference_constants(self):
        eps, d0 = A.proposition_reference_constants(0.01, 2)
        assert eps == pytest.approx(1e-12, rel=1e-9)
        assert d0 == pytest.approx(1e13, rel=1e-9)
        with pytest.raises(ValueError):
            A.proposition_reference_constants(0.0, 2)

    def test_validation(self, sim_log):
        with pytest.raises(ValueError):
            A.check_proposition_instance(sim_log, 2, eps=0.0, D=1.0)


class TestSigmaThetaConsistency:
    def test_theta_time_meets_weighted_threshold(self, sim_log):
        for M in (0.5, 1.0, 2.0):
            n = A.first_stream_appearance(sim_log, 2, M=M, gamma=0.5)
            if n is None:
                continue
            hits = [
                j for j in (1, 2)
                if A.delta_series(sim_log, j)[n] >= (0.5 ** (j * 2)) * M
            ]
            assert hits
            # minimality: no earlier time qualifies
            for j in (1, 2):
                thr = (0.5 ** (j * 2)) * M
                assert not np.any(A.delta_series(sim_log, j)[:n] >= thr)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.booleans(), min_size=2, max_size=40))
def test_running_max_never_decreases_on_arbitrary_paths(bits):
    pos, path = 0, [0]
    for b in bits:
        step = 1 if (b and pos < 3) else -1
        step = step if 0 <= pos + step <= 3 else -step
        pos += step
        path.append(pos)
    log = log_from_path(path, params())
    rep = A.max_interior_stream(log, 2)
    assert np.all(np.diff(rep.running_max) >= 0)
