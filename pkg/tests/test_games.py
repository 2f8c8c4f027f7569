from fractions import Fraction

import numpy as np
import pytest

from gapstab.abelian import boolean_group, rep_from_pvm
from gapstab.algebra import PVM, AlgebraElement, TracialAlgebra, haar_unitary
from gapstab.codes import LinearCode
from gapstab.errors import GapstabError, InvalidArgument, ResourceCap
from gapstab.games import (
    ANTICOMMUTATION_CONSTANT,
    COMMUTATION_PROJECTION_CONSTANT,
    COMMUTATION_UNITARY_CONSTANT,
    Game,
    SynchronousStrategy,
    _CELLS,
    _LINES,
    _SIGMA_X,
    _SIGMA_Z,
    _joint_pvm,
    _magic_grid,
    _sign_pvm,
    _TAU_X,
    _TAU_Z,
    anticommutation_bound_check,
    closeness,
    combined_game,
    commutation_bound_check,
    commutation_game,
    expand_rules,
    game_from_code,
    gn_game,
    honest_strategy,
    line_cells,
    line_sign,
    magic_square_game,
    pauli_pvms,
    pauli_rigidity_report,
    perturb_strategy,
    strategy_from_jsonable,
    strategy_to_jsonable,
    symmetrize,
    unitary_pvm_bridge,
    value,
)
from gapstab.stability import Intertwiner


def _diag_strategy():
    """A perfect commutation-game strategy: two diagonal sign observables."""
    alg = TracialAlgebra.matrix(4)

    def diag(signs):
        eye = np.eye(4)
        plus = np.diag([(1.0 + s) / 2 for s in signs])
        return PVM(alg, [-1, 1], [AlgebraElement(alg, [eye - plus]),
                                  AlgebraElement(alg, [plus])])

    p = [1, 1, -1, -1]
    q = [1, -1, 1, -1]
    pvms = {"x1": diag(p), "x2": diag(q)}
    joint = {}
    for a in (-1, 1):
        for b in (-1, 1):
            m = np.diag([
                float(pa == a and qa == b) for pa, qa in zip(p, q)
            ])
            joint[(a, b)] = AlgebraElement(alg, [m])
    outcomes = list(joint)
    pvms["y"] = PVM(alg, outcomes, [joint[o] for o in outcomes])
    return SynchronousStrategy(alg, pvms)


# -- Game construction and bookkeeping --------------------------------------------


def test_game_validation():
    answers = {"x": (0, 1), "y": (0, 1)}
    mu = {("x", "y"): 1}
    rules = {("x", "y"): ("pairs", frozenset({(0, 0), (1, 1)}))}
    Game(["x", "y"], answers, mu, rules)
    with pytest.raises(InvalidArgument):
        Game(["x", "x"], {"x": (0,)}, {("x", "x"): 1}, {("x", "x"): ("pairs", frozenset())})
    with pytest.raises(InvalidArgument):
        Game(["x", "y"], {"x": (0, 1), "y": ()}, mu, rules)
    with pytest.raises(InvalidArgument):
        Game(["x", "y"], answers, {("x", "y"): Fraction(1, 2)}, rules)
    with pytest.raises(InvalidArgument):
        Game(["x", "y"], answers, {("x", "z"): 1}, rules)
    with pytest.raises(InvalidArgument):
        Game(["x", "y"], answers, {("y", "x"): -1, ("x", "y"): 2}, rules)
    with pytest.raises(InvalidArgument):
        Game(["x", "y"], answers, {("y", "y"): 1}, rules)


def test_accepts_swapped_orientation():
    game = commutation_game((-1, 1), (-1, 1))
    # the rule is stored for ("x1", "y"); querying the reverse order must agree
    for a in (-1, 1):
        for b in game.answers["y"]:
            assert game.accepts("x1", "y", a, b) == game.accepts("y", "x1", b, a)


def test_marginal_and_question_mass():
    game = game_from_code(LinearCode(2, [[1]]))
    assert game.question_mass("PX") == Fraction(1, 3)
    assert game.question_mass("PZ") == Fraction(1, 3)
    assert game.marginal("PX") == Fraction(1, 6)
    total = sum(game.question_mass(x) for x in game.questions)
    assert total == 1


def test_game_json_round_trip():
    game = game_from_code(LinearCode(2, [[1]]))
    blob = game.to_jsonable()
    back = Game.from_jsonable(blob)
    assert back.questions == game.questions
    assert back.mu == game.mu
    assert back.rules == game.rules
    assert back.h_group.orders == game.h_group.orders
    assert back.rigidity_constant == Fraction(1, 4)
    assert back.case_of == game.case_of
    strat = honest_strategy(back)
    assert abs(value(back, strat) - 1.0) < 1e-9


def test_strategy_json_round_trip():
    game = game_from_code(LinearCode(2, [[1]]))
    strat = perturb_strategy(honest_strategy(game), 0.1, np.random.default_rng(0))
    back = strategy_from_jsonable(strategy_to_jsonable(strat))
    assert abs(value(game, strat) - value(game, back)) < 1e-12


# -- commutation game --------------------------------------------------------------


def test_commutation_game_honest():
    game = commutation_game((-1, 1), (-1, 1))
    strat = _diag_strategy()
    assert abs(value(game, strat) - 1.0) < 1e-12
    chk = commutation_bound_check(strat, 0.0)
    assert chk.lhs_projections < 1e-20
    assert chk.lhs_unitary < 1e-20


def test_commutation_game_perturbed():
    game = commutation_game((-1, 1), (-1, 1))
    rng = np.random.default_rng(1)
    for _ in range(5):
        strat = perturb_strategy(_diag_strategy(), 0.15, rng)
        eps = 1.0 - value(game, strat)
        assert eps > 1e-8
        chk = commutation_bound_check(strat, eps)
        assert chk.bound_projections == COMMUTATION_PROJECTION_CONSTANT * eps
        assert chk.bound_unitary == COMMUTATION_UNITARY_CONSTANT * eps
        assert chk.lhs_projections <= chk.bound_projections * (1 + 1e-9)
        assert chk.lhs_unitary <= chk.bound_unitary * (1 + 1e-9)


def test_commutation_game_empty_answers():
    with pytest.raises(InvalidArgument):
        commutation_game((), (-1, 1))


# -- magic square game -------------------------------------------------------------


def _magic_strategy(game, p_mat=_SIGMA_X, q_mat=_SIGMA_Z):
    grid = _magic_grid(p_mat, q_mat)
    alg = TracialAlgebra.matrix(grid[(1, 1)].shape[0])
    pvms = {c: _sign_pvm(alg, grid[c]) for c in _CELLS}
    for line in _LINES:
        mats = [grid[c] for c in line_cells(line)]
        pvms[line] = _joint_pvm(alg, game.answers[line], mats)
    return SynchronousStrategy(alg, pvms)


def test_magic_square_structure():
    game = magic_square_game()
    assert len(game.questions) == 15
    assert len(game.mu) == 18
    assert all(p == Fraction(1, 18) for p in game.mu.values())
    assert [line for line in _LINES if line_sign(line) == -1] == [("v", 3)]
    for line in _LINES:
        for b in game.answers[line]:
            assert b[0] * b[1] * b[2] == line_sign(line)


def test_magic_square_honest():
    game = magic_square_game()
    strat = _magic_strategy(game)
    assert abs(value(game, strat) - 1.0) < 1e-12
    chk = anticommutation_bound_check(strat, 0.0)
    assert chk.lhs < 1e-20
    assert chk.eta_square_sum < 1e-20


def test_magic_square_perturbed():
    game = magic_square_game()
    rng = np.random.default_rng(2)
    for _ in range(3):
        strat = perturb_strategy(_magic_strategy(game), 0.1, rng)
        eps = 1.0 - value(game, strat)
        assert eps > 1e-8
        chk = anticommutation_bound_check(strat, eps)
        assert chk.bound == ANTICOMMUTATION_CONSTANT * eps
        assert chk.lhs <= chk.bound * (1 + 1e-9)
        assert set(chk.eta_by_line) == set(_LINES)


def test_magic_grid_rejects_commuting_pair():
    with pytest.raises(GapstabError):
        _magic_grid(_SIGMA_Z, _SIGMA_Z)


# -- Pauli PVMs --------------------------------------------------------------------


def test_pauli_pvms_single_qubit():
    tau_x, tau_z = pauli_pvms(1)
    assert np.allclose(tau_x[(0,)].blocks[0], _TAU_X[0])
    assert np.allclose(tau_x[(1,)].blocks[0], _TAU_X[1])
    assert np.allclose(tau_z[(0,)].blocks[0], _TAU_Z[0])
    assert np.allclose(tau_z[(1,)].blocks[0], _TAU_Z[1])


def test_pauli_pvms_caps():
    with pytest.raises(ResourceCap):
        pauli_pvms(13)
    with pytest.raises(InvalidArgument):
        pauli_pvms(0)


def test_pauli_reps_twisted_relation():
    tau_x, tau_z = pauli_pvms(2)
    grp = boolean_group(2)
    u = rep_from_pvm(tau_x, grp)
    v = rep_from_pvm(tau_z, grp.dual())
    alg = u.algebra
    for h in grp.elements:
        for chi in grp.elements:
            s = float(grp.pairing(chi, h))
            res = alg.norm2(u.images[h] * v.images[chi] - s * (v.images[chi] * u.images[h]))
            assert res < 1e-12


# -- combined games ----------------------------------------------------------------


def test_combined_game_single_anticommuting_pair():
    grp = boolean_group(1)
    game = combined_game(grp, {"w": 1}, {"w": (1,)}, {"w": (1,)})
    assert len(game.questions) == 17  # PX, PZ, nine cells, six lines
    assert game.omega_data["w"]["sign"] == -1
    strat = honest_strategy(game)
    assert abs(value(game, strat) - 1.0) < 1e-9


def test_combined_game_both_branches():
    grp = boolean_group(1)
    omega = {"c": Fraction(1, 2), "a": Fraction(1, 2)}
    alpha = {"c": (0,), "a": (1,)}
    beta = {"c": (1,), "a": (1,)}
    game = combined_game(grp, omega, alpha, beta)
    assert len(game.questions) == 2 + 3 + 15
    assert game.omega_data["c"]["sign"] == 1
    assert game.omega_data["a"]["sign"] == -1
    strat = honest_strategy(game)
    assert abs(value(game, strat) - 1.0) < 1e-9


def test_combined_game_rejects_dependent_variables():
    grp = boolean_group(1)
    omega = {"w1": Fraction(1, 2), "w2": Fraction(1, 2)}
    alpha = {"w1": (0,), "w2": (1,)}
    beta = {"w1": (0,), "w2": (1,)}  # beta == alpha under the pairing: dependent
    with pytest.raises(InvalidArgument):
        combined_game(grp, omega, alpha, beta)


def test_combined_game_rejects_higher_exponent():
    from gapstab.abelian import AbelianGroup

    with pytest.raises(InvalidArgument):
        combined_game(AbelianGroup((3,)), {"w": 1}, {"w": (1,)}, {"w": (1,)})


def test_game_from_code():
    game = game_from_code(LinearCode(2, [[1]]))
    assert game.rigidity_constant == Fraction(1, 4)
    assert game.question_mass("PX") == Fraction(1, 3)
    with pytest.raises(InvalidArgument):
        game_from_code(LinearCode(2, [[1, 1, 1]]), LinearCode(2, [[1, 0], [0, 1]]))
    with pytest.raises(InvalidArgument):
        game_from_code(LinearCode(3, [[1]]))


def test_gn_game():
    game = gn_game(1, rng=np.random.default_rng(0))
    strat = honest_strategy(game)
    assert abs(value(game, strat) - 1.0) < 1e-9
    with pytest.raises(InvalidArgument):
        gn_game(2, code_source=LinearCode(2, [[1]]))


# -- value engine ------------------------------------------------------------------


def test_value_requires_full_strategy():
    game = commutation_game((-1, 1), (-1, 1))
    strat = _diag_strategy()
    partial = SynchronousStrategy(strat.algebra, {"x1": strat["x1"], "x2": strat["x2"]})
    with pytest.raises(InvalidArgument):
        value(game, partial)
    with pytest.raises(InvalidArgument):
        value(game, strat, pauli_mode="fast")


def test_value_shortcut_matches_explicit():
    game = game_from_code(LinearCode(2, [[1]]))
    strat = perturb_strategy(honest_strategy(game), 0.2, np.random.default_rng(3))
    v_short = value(game, strat)
    v_expl = value(game, strat, pauli_mode="explicit")
    assert abs(v_short - v_expl) < 1e-12


def test_expand_rules_value_match():
    game = game_from_code(LinearCode(2, [[1]]))
    strat = perturb_strategy(honest_strategy(game), 0.15, np.random.default_rng(4))
    expanded = expand_rules(game)
    assert all(tag == "pairs" for tag, _ in expanded.rules.values())
    assert abs(value(game, strat) - value(expanded, strat)) < 1e-12
    with pytest.raises(ResourceCap):
        expand_rules(game, cap=1)


def test_symmetrize_value_invariance():
    game = game_from_code(LinearCode(2, [[1]]))
    sym = symmetrize(game)
    assert sum(sym.mu.values()) == 1
    for (x, y), p in sym.mu.items():
        assert p == sym.mu[(y, x)]
    strat = perturb_strategy(honest_strategy(game), 0.1, np.random.default_rng(5))
    assert abs(value(game, strat) - value(sym, strat)) < 1e-12


def test_perturb_strategy_zero_sigma():
    game = commutation_game((-1, 1), (-1, 1))
    strat = _diag_strategy()
    same = perturb_strategy(strat, 0.0, np.random.default_rng(6))
    assert abs(value(game, same) - 1.0) < 1e-12
    with pytest.raises(InvalidArgument):
        perturb_strategy(strat, -0.1, np.random.default_rng(6))


# -- closeness and the bridge ------------------------------------------------------


def test_closeness_identity_witness():
    strat = _diag_strategy()
    w = Intertwiner.identity(strat.algebra)
    cert = closeness(strat, strat, w)
    assert cert.trace_defect_base < 1e-12
    assert cert.trace_defect_corner < 1e-12
    assert cert.strategy_distance < 1e-20
    assert cert.is_close(1e-9)
    r = cert.report()
    assert set(r["per_question"]) == {"x1", "x2", "y"}


def test_unitary_pvm_bridge():
    tau_x, _ = pauli_pvms(2)
    grp = boolean_group(2)
    u = rep_from_pvm(tau_x, grp)
    c = AlgebraElement(u.algebra, [haar_unitary(4, np.random.default_rng(7))])
    v = rep_from_pvm(tau_x.conjugated(c), grp)
    w = Intertwiner.identity(u.algebra)
    bridge = unitary_pvm_bridge(u, v, w)
    assert bridge.unitary_side > 1e-6
    assert abs(bridge.unitary_side - bridge.pvm_side) < 1e-10


# -- rigidity reports --------------------------------------------------------------


def test_rigidity_report_honest():
    game = game_from_code(LinearCode(2, [[1]]))
    strat = honest_strategy(game)
    rep = pauli_rigidity_report(game, strat)
    assert rep["epsilon"] < 1e-12
    assert rep["prop_lhs"] < 1e-12
    assert rep["c_alpha"] == 0.5 and rep["c_beta"] == 0.5
    assert rep["relation_residual"] < 1e-9
    assert rep["closeness"]["strategy_distance"] < 1e-9
    assert rep["bridge_residual"] < 1e-10
    assert rep["certificate"].is_close(1e-8)


def test_rigidity_report_conjugated_honest():
    game = game_from_code(LinearCode(2, [[1]]))
    strat = honest_strategy(game)
    alg = strat.algebra
    c = AlgebraElement(alg, [haar_unitary(alg.dims[0], np.random.default_rng(8))])
    moved = SynchronousStrategy(
        alg, {x: pvm.conjugated(c) for x, pvm in strat.pvms.items()}
    )
    assert abs(value(game, moved) - 1.0) < 1e-12
    rep = pauli_rigidity_report(game, moved)
    assert rep["epsilon"] < 1e-12
    assert rep["closeness"]["strategy_distance"] < 1e-8


def test_rigidity_report_requires_structure():
    game = magic_square_game()
    strat = _magic_strategy(game)
    with pytest.raises(InvalidArgument):
        pauli_rigidity_report(game, strat)
