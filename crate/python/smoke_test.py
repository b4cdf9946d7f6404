"""Smoke test for the `triage` extension module.

Build first, e.g. `maturin develop -m crates/python/Cargo.toml`, then run
`python python/smoke_test.py`.
"""

import os
import tempfile

import triage


def main():
    assert triage.clean("Hi!  Can't log-in...") == "Hi Cant login"
    assert triage.label("Blackboard down", "and my password expired") == "blackboard"
    assert triage.label("hello", "nothing relevant") is None
    assert "is" not in triage.preprocess("the internet is not working")

    emails = triage.synth(seed=3)
    assert len(emails) == 215
    train, test = emails[:170], emails[170:]

    tree = triage.Model.train("tree", train, seed=3)
    nn = triage.Model.train("nn", train, seed=3)
    assert tree.kind == "tree" and nn.kind == "mlp"
    assert len(nn.categories) == 5

    category, confidence = nn.classify("Password", "I forgot my password")
    assert category in nn.categories and 0.0 < confidence <= 1.0

    reply = nn.reply("Password", "I forgot my password", threshold=0.0)
    assert reply["tailored"] and "{snippet}" not in reply["rendered"]
    print(nn.evaluate(test))

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "model.json")
        nn.save(path)
        back = triage.Model.load(path)
        assert back.classify("Wifi", "keeps dropping") == nn.classify("Wifi", "keeps dropping")

    try:
        triage.Model.load("/nonexistent/model.json")
    except OSError:
        pass
    else:
        raise AssertionError("missing file should raise")
    print("smoke test passed:", repr(nn))


if __name__ == "__main__":
    main()
