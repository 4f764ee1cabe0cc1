import math

import numpy as np
import pytest

import cir_retrieval as cr

SMALL = {"k": 4, "d": 16, "blocks": 1, "heads": 4}


@pytest.fixture(scope="module")
def corpus():
    images, cases = cr.synth_corpus(images=60, cases=5, seed=4)
    return images, cases


def test_version_and_modes():
    assert cr.__version__ == "0.1.0"
    assert cr.modes()[0] == "fused"
    assert len(cr.modes()) == 7


def test_maxsim_examples():
    a = np.array([[1, 0], [0, 1]], dtype=np.float32)
    b = np.array([[0.6, 0.8]], dtype=np.float32)
    assert cr.maxsim(a, b) == pytest.approx(0.7, abs=1e-7)
    assert cr.maxsim(a, a) == pytest.approx(1.0)
    sim = cr.similarity_matrix([a, b], [a, b, a])
    assert sim.shape == (2, 3)
    assert sim[0, 1] == pytest.approx(cr.maxsim(a, b))
    with pytest.raises(ValueError):
        cr.maxsim(a, np.zeros((1, 2), dtype=np.float32))


def test_info_nce_closed_forms():
    assert cr.info_nce(np.full((5, 5), 0.3), 0.07) == pytest.approx(math.log(5), abs=1e-12)
    assert cr.info_nce(np.eye(2), 1.0) == pytest.approx(0.313262, abs=1e-6)


def test_corpus_round_trip(tmp_path, corpus):
    images, cases = corpus
    assert len(images) == 60 and len(cases) == 5
    assert images[0].tokens.dtype == np.float32
    path = str(tmp_path / "c.cirf")
    cr.save_features(images, path)
    back = cr.load_features(path)
    assert [i.id for i in back] == [i.id for i in images]
    assert np.array_equal(back[3].tokens, images[3].tokens)
    with pytest.raises(OSError):
        cr.load_features(str(tmp_path / "missing.cirf"))


def test_encoder_shapes_and_checkpoint(tmp_path, corpus):
    images, _ = corpus
    enc = cr.Encoder.init(SMALL, seed=1)
    assert enc.config["k"] == 4
    assert enc.encode_image(images[0].tokens).shape == (4, 16)
    assert enc.encode_text("a red cube").shape == (4, 16)
    assert enc.encode_composed(images[0].tokens, "change the color to blue").shape == (4, 16)
    path = str(tmp_path / "m.cirp")
    enc.save(path)
    assert cr.Encoder.load(path).to_bytes() == enc.to_bytes()
    with pytest.raises(ValueError):
        cr.Encoder.init({"k": 4, "d": 10, "heads": 4})


def test_grad_check_small():
    images, _ = cr.synth_corpus(images=4, cases=0, seed=2)
    triplets, captions = cr.curate_template(images, seed=2)
    enc = cr.random_encoder(SMALL, seed=2)
    assert cr.grad_check(enc, images, triplets, captions, samples=20) < 1e-4


def test_train_retrieve_evaluate(corpus):
    images, cases = corpus
    triplets, captions = cr.curate_template(images, seed=4)
    assert len(triplets) == len(captions) == 60
    enc, info = cr.train(images, triplets, captions, SMALL,
                         {"epochs": 3, "batch_size": 16, "seed": 1})
    assert len(info["epochs"]) == 3
    assert info["epochs"][-1]["loss_total"] < info["initial_loss"]

    index = cr.Index.build(images, enc)
    assert len(index) == 60 and index.params_digest == enc.digest()
    retriever = cr.Retriever(index, enc)
    top = retriever.retrieve(images[0], "change the color to blue", "vlm_only", topk=5)
    assert len(top) == 5
    assert all(top[i][1] >= top[i + 1][1] for i in range(4))
    with pytest.raises(ValueError):
        retriever.retrieve(images[0], "change the color to blue", "fused")
    fused = retriever.score(images[0], "change the color to blue", "fused", "a blue cube")
    assert len(fused) == 60

    report = retriever.evaluate(cases, images, "fused", "R@1,R@10")
    assert set(report["metrics"]) == {"R@1", "R@10"}
    assert 0.0 <= report["metrics"]["R@10"] <= 1.0


def test_cli_entry_point():
    code, out, _ = cr.run_cli(["--version"])
    assert code == 0 and "0.1.0" in out
    code, _, err = cr.run_cli(["evaluate", "--index", "x", "--cases", "y"])
    assert code == 1 and "--checkpoint" in err
