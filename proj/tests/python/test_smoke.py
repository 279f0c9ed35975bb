import math

import pytest

import laoc


def test_dynamics_and_costs():
    p = laoc.SystemParams()
    assert laoc.step_dynamics(p, 40.0, 5.0, 3.0) == 42.0
    assert laoc.risk(30.0, 10.0, p) == pytest.approx(107.3984)
    with pytest.raises(laoc.InvalidInput):
        laoc.step_dynamics(p, 40.0, -1.0, 0.0)


def test_reservation_schedule():
    s = laoc.SafeSetParams.build(laoc.SystemParams(), 0.4)
    assert len(s.q) == 25
    assert s.q[-1] == 0.0
    assert all(a >= b for a, b in zip(s.q, s.q[1:]))
    assert s.lambda0 == pytest.approx(math.sqrt(1.4) - 1)


def test_laoc_is_safe_under_an_adversary():
    p = laoc.SystemParams()
    cfg = laoc.ControllerConfig(laoc.ControllerKind.LAOC, 0.4)
    for episode in laoc.gen_synthetic(3, 20):
        r = laoc.run_controller(episode, p, cfg, constant_action=p.u_max)
        assert not r.any_violation()
        assert r.risk_ratio <= 1.4 + 1e-9
        assert all(0.0 <= u <= p.u_max for u in r.action)


def test_zero_lambda_copies_the_prior():
    p = laoc.SystemParams()
    episode = laoc.gen_synthetic(4, 1)[0]
    a = laoc.run_controller(episode, p, laoc.ControllerConfig(laoc.ControllerKind.LAOC, 0.0),
                            constant_action=7.0)
    b = laoc.run_controller(episode, p, laoc.ControllerConfig(laoc.ControllerKind.PRIOR_ONLY, 0.0))
    assert a.action == b.action


def test_train_and_evaluate(tmp_path):
    p = laoc.SystemParams()
    train = laoc.gen_synthetic(1, 20)
    cfg = laoc.TrainConfig()
    cfg.epochs = 5
    result = laoc.train_pure(train, p, cfg)
    assert len(result.loss_curve) == 5
    path = tmp_path / "policy.json"
    laoc.save_policy(path, result.net, cfg, result.loss_curve)
    net = laoc.load_policy(path)
    assert net.theta == result.net.theta

    test = laoc.gen_synthetic(2, 10)
    controllers = [("prior", laoc.ControllerConfig(laoc.ControllerKind.PRIOR_ONLY)),
                   ("laoc", laoc.ControllerConfig(laoc.ControllerKind.LAOC))]
    rows = laoc.evaluate(controllers, test, [0.2, 0.8], p, policy=net, dataset="t", jobs=2)
    assert [r.controller for r in rows] == ["prior", "prior", "laoc", "laoc"]
    assert rows[0].max_risk_ratio == 1.0
    assert all(r.violation_prob == 0.0 for r in rows)


def test_csv_round_trip(tmp_path):
    episodes = laoc.gen_synthetic(5, 3)
    path = tmp_path / "t.csv"
    laoc.write_csv(path, episodes)
    back = laoc.load_csv(path)
    assert [e.id for e in back] == [e.id for e in episodes]
    bad = tmp_path / "bad.csv"
    bad.write_text("timestamp,demand\n")
    with pytest.raises(laoc.ParseError):
        laoc.load_csv(bad)


def test_acceptance_subset():
    results = laoc.run_acceptance(quick=True, only=[4, 10])
    assert [r.id for r in results] == [4, 10]
    assert all(r.passed for r in results), [str(r) for r in results]
