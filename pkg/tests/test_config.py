import json

import pytest

from smemnas.config import ConfigError, SearchConfig, resolve_key


def test_defaults_roundtrip():
    cfg = SearchConfig()
    again = SearchConfig.from_dict(json.loads(cfg.to_json()))
    assert again == cfg
    assert again.digest() == cfg.digest()


def test_digest_ignores_threads():
    assert SearchConfig(threads=4).digest() == SearchConfig().digest()
    assert SearchConfig(seed=1).digest() != SearchConfig().digest()


@pytest.mark.parametrize(
    "key,path",
    [("G", ("moea", "G")), ("moea.m", ("moea", "m")), ("N", ("N",)), ("gamma", ("surrogate", "gamma")),
     ("synthetic.noise_sigma", ("evaluator", "synthetic", "noise_sigma"))],
)
def test_resolve_key(key, path):
    assert resolve_key(key) == path


def test_ambiguous_and_unknown_keys():
    with pytest.raises(ConfigError, match="ambiguous"):
        resolve_key("kind")
    with pytest.raises(ConfigError, match="unknown"):
        resolve_key("nope")


def test_overrides_and_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"N": 30, "moea": {"G": 3}}))
    cfg = SearchConfig.load(p, ["moea.m=10", "surrogate.kind=knn", "multipop=false"])
    assert (cfg.N, cfg.moea.G, cfg.moea.m, cfg.surrogate.kind, cfg.moea.multipop) == (30, 3, 10, "knn", False)


@pytest.mark.parametrize(
    "overrides",
    [["N=1"], ["T=0"], ["moea.m=3"], ["bogus=1"], ["noequals"], ["evaluator.kind=tabular"], ["surrogate.kind=tree"]],
)
def test_invalid_config(overrides):
    with pytest.raises(ConfigError):
        SearchConfig.load(None, overrides)


def test_unknown_nested_key(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"moea": {"GG": 3}}))
    with pytest.raises(ConfigError, match="moea"):
        SearchConfig.load(p)


def test_config_schema_matches_dataclasses():
    jsonschema = pytest.importorskip("jsonschema")
    from pathlib import Path

    from smemnas.config import KEY_PATHS

    schema = json.loads((Path(__file__).resolve().parents[1] / "docs/schemas/config.schema.json").read_text())
    jsonschema.validate(SearchConfig().to_dict(), schema)

    def leaves(node, prefix=()):
        for k, v in node["properties"].items():
            yield from leaves(v, prefix + (k,)) if v.get("type") == "object" else [prefix + (k,)]

    assert sorted(leaves(schema)) == sorted(KEY_PATHS)
