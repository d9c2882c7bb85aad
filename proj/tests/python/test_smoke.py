import json
import os
import subprocess

import numpy as np
import pytest

import kge

RING = "".join(f"n{i}\tnext\tn{(i + 1) % 12}\n" for i in range(12))


def test_load_and_split():
    kg = kge.load_triples(RING + "n0\tback\tn11\n")
    assert (kg.n_ent, kg.n_rel, len(kg)) == (12, 2, 13)
    assert kg.triples()[0] == (0, 0, 1)
    parts = kge.split(kg, 0.5, with_validation=True, seed=1)
    total = len(parts["train"]) + len(parts["valid"]) + len(parts["test"])
    assert total == len(kg)
    assert sorted(parts["train"].triples() + parts["valid"].triples() + parts["test"].triples()) == sorted(
        kg.triples()
    )


def test_parse_error():
    with pytest.raises(kge.KgeError):
        kge.load_triples("a\tb\n")


@pytest.mark.parametrize("kind", kge.MODEL_KINDS)
def test_scores_agree(kind):
    m = kge.init_model(kind, 12, 2, 6, seed=3)
    facts = [(0, 0, 1), (4, 1, 7), (11, 0, 2)]
    one = m.score(facts)
    full = m.score_all(facts, "tail")
    assert full.shape == (3, 12)
    for i, (_, _, t) in enumerate(facts):
        assert full[i, t] == one[i]


def test_params_round_trip(tmp_path):
    m = kge.init_model("DistMult", 4, 1, 3, seed=0)
    ent = m.get_param("ent")
    assert ent.shape == (4, 3)
    m.set_param("ent", np.ones((4, 3)))
    assert m.score([(0, 0, 1)])[0] == pytest.approx(m.get_param("rel").sum())
    path = str(tmp_path / "m.kge")
    kge.save_checkpoint(m, path)
    assert kge.load_checkpoint(path) == m


def test_training_improves_ranking():
    kg = kge.load_triples(RING)
    cfg = kge.TrainConfig.preset("TransE")
    cfg.dim = cfg.rel_dim = 8
    cfg.n_batches = 2
    trainer = kge.Trainer(cfg, kg)
    before = kge.link_prediction(trainer.model, kg)["combined"]["mrr_filt"]
    losses = [trainer.epoch() for _ in range(100)]
    after = kge.link_prediction(trainer.model, kg)["combined"]["mrr_filt"]
    assert losses[-1] < losses[0]
    assert after > before
    looped = kge.link_prediction(trainer.model, kg, mode="looped")
    assert looped == kge.link_prediction(trainer.model, kg, batch_size=5)


def test_sampler_and_thresholds():
    kg = kge.load_triples(RING)
    neg = kge.NegativeSampler("bernoulli", kg, seed=2).corrupt_kg(kg)
    assert len(neg) == len(kg)
    for (h, r, t), (h2, r2, t2) in zip(kg.triples(), neg):
        assert r == r2 and ((h != h2) != (t != t2))
    threshold, acc = kge.best_threshold([2.0, 3.0], [0.0, 1.0])
    assert threshold == 1.5 and acc == 1.0


@pytest.mark.skipif("KGE_CLI" not in os.environ, reason="command-line tool path not given")
def test_cli_help():
    res = subprocess.run([os.environ["KGE_CLI"], "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "train" in res.stdout
