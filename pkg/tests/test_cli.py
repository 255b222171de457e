import json

import pytest

from canonmap.cli import main

from helpers import GOLDEN_ONES, golden_registry


@pytest.fixture()
def golden_inputs(tmp_path):
    """Golden fixture as CLI input files (schema journal + mapping CSV)."""
    schemas = tmp_path / "schemas.jsonl"
    registry = golden_registry()
    schemas.write_text(
        "".join(json.dumps(e, sort_keys=True) + "\n" for e in registry.journal)
    )
    mappings = tmp_path / "mappings.csv"
    mappings.write_text(
        "schema,schema_version,attribute,entity,entity_version,cdm_attribute\n"
        + "".join(f"{o},{v},{a},{r},{w},{c}\n" for o, v, a, r, w, c in GOLDEN_ONES)
    )
    return schemas, mappings


def _init(tmp_path, golden_inputs, store_name="store"):
    schemas, mappings = golden_inputs
    store = tmp_path / store_name
    code = main(
        ["init", "--schemas", str(schemas), "--mappings", str(mappings), "--store", str(store)]
    )
    assert code == 0
    return store


def test_init_creates_store_and_refuses_overwrite(tmp_path, golden_inputs, capsys):
    store = _init(tmp_path, golden_inputs)
    assert (store / "mapping.json").exists()
    out = capsys.readouterr().out
    assert "dense=7" in out and "run=5+1null" in out

    assert main(
        ["init", "--schemas", str(golden_inputs[0]), "--mappings", str(golden_inputs[1]),
         "--store", str(store)]
    ) == 2
    assert main(
        ["init", "--schemas", str(golden_inputs[0]), "--mappings", str(golden_inputs[1]),
         "--store", str(store), "--force"]
    ) == 0


def test_map_stream_end_to_end(tmp_path, golden_inputs):
    store = _init(tmp_path, golden_inputs)
    infile = tmp_path / "in.jsonl"
    infile.write_text(
        '{"schema": "s1", "version": 1, "payload": {"a1": "X", "a3": "Y"}}\n'
        "garbage\n"
        '{"schema": "s9", "version": 1, "payload": {"x": 1}}\n'
    )
    outfile = tmp_path / "out.jsonl"
    errfile = tmp_path / "err.jsonl"
    code = main(
        ["map", "--store", str(store), "--in", str(infile), "--out", str(outfile),
         "--errors", str(errfile)]
    )
    assert code == 0
    outputs = [json.loads(l) for l in outfile.read_text().splitlines()]
    errors = [json.loads(l) for l in errfile.read_text().splitlines()]
    assert len(outputs) == 2 and len(errors) == 2
    assert outputs[0]["entity"] == "be1" and outputs[0]["payload"] == {"c3": "X", "c4": "Y"}


def test_sparse_oracle_mode_produces_identical_stream(tmp_path, golden_inputs):
    store = _init(tmp_path, golden_inputs)
    infile = tmp_path / "in.jsonl"
    infile.write_text(
        '{"schema": "s1", "version": 1, "payload": {"a1": "X", "a3": "Y"}}\n'
        '{"schema": "s1", "version": 2, "payload": {"a5": "Q"}}\n'
    )
    dense_out = tmp_path / "dense.jsonl"
    oracle_out = tmp_path / "oracle.jsonl"
    assert main(["map", "--store", str(store), "--in", str(infile),
                 "--out", str(dense_out), "--dense"]) == 0
    assert main(["map", "--store", str(store), "--in", str(infile),
                 "--out", str(oracle_out), "--sparse-oracle"]) == 0
    assert dense_out.read_bytes() == oracle_out.read_bytes()


def test_update_case3_emits_notification_and_acks(tmp_path, golden_inputs, capsys):
    store = _init(tmp_path, golden_inputs)
    definition = tmp_path / "s1v3.json"
    definition.write_text(
        '{"side": "domain", "schema": "s1", "version": 3, '
        '"attributes": ["a7"], "equivalences": {"a7": "a4"}}'
    )
    code = main(
        ["update", "--store", str(store), "--case", "3", "--schema", "s1",
         "--version", "3", "--file", str(definition)]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "shrunken_permutation" in out

    assert main(["notifications", "--store", str(store)]) == 0
    listed = capsys.readouterr().out
    assert "shrunken_permutation" in listed and "[1]" in listed
    assert main(["notifications", "--store", str(store), "--ack", "1"]) == 0
    assert main(["notifications", "--store", str(store), "--ack", "1"]) == 2

    # the new version is now mappable
    infile = tmp_path / "v3.jsonl"
    infile.write_text('{"schema": "s1", "version": 3, "payload": {"a7": "V"}}\n')
    outfile = tmp_path / "v3out.jsonl"
    assert main(["map", "--store", str(store), "--in", str(infile),
                 "--out", str(outfile)]) == 0
    outputs = [json.loads(l) for l in outfile.read_text().splitlines()]
    assert outputs == [{"entity": "be1", "entity_version": 2,
                        "state": json.loads((store / "mapping.json").read_text())["state"],
                        "payload": {"c3": "V"}}]


def test_update_case1_deletes_and_repeat_fails(tmp_path, golden_inputs):
    store = _init(tmp_path, golden_inputs)
    assert main(["update", "--store", str(store), "--case", "1",
                 "--schema", "s2", "--version", "1"]) == 0
    assert main(["update", "--store", str(store), "--case", "1",
                 "--schema", "s2", "--version", "1"]) == 2


def test_update_case_mismatch_is_validation_error(tmp_path, golden_inputs):
    store = _init(tmp_path, golden_inputs)
    definition = tmp_path / "wrong.json"
    definition.write_text(
        '{"side": "range", "schema": "be9", "version": 1, "attributes": ["c9"]}'
    )
    code = main(
        ["update", "--store", str(store), "--case", "3", "--schema", "be9",
         "--version", "1", "--file", str(definition)]
    )
    assert code == 3


def test_inspect_commands(tmp_path, golden_inputs, capsys):
    store = _init(tmp_path, golden_inputs)
    assert main(["inspect", "reverse", "--store", str(store),
                 "--entity", "be1", "--version", "2"]) == 0
    out = capsys.readouterr().out
    assert "s1 v1" in out and "s1 v2" in out
    assert main(["inspect", "progression", "--store", str(store),
                 "--schema", "s1"]) == 0
    out = capsys.readouterr().out
    assert "s1 v1: be1 v2, be3 v1" in out and "s1 v2: be1 v2" in out


def test_workload_and_bench_commands(tmp_path, capsys):
    config = tmp_path / "config.json"
    config.write_text(
        json.dumps(
            {"schemas": 2, "versions_per_schema": 2, "attrs_per_version": 3,
             "cdm_entities": 2, "cdm_attrs": 3, "mapped_fraction": 0.5,
             "messages": 20, "seed": 1}
        )
    )
    outdir = tmp_path / "workload"
    assert main(["workload", "--config", str(config), "--out", str(outdir)]) == 0
    capsys.readouterr()
    assert (outdir / "schemas.jsonl").exists()
    assert (outdir / "mappings.csv").exists()
    assert (outdir / "messages.jsonl").exists()

    assert main(["bench", "--config", str(config), "--json"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["message_count"] == 20

    # generated workload also initializes and maps end to end
    store = tmp_path / "wstore"
    assert main(["init", "--schemas", str(outdir / "schemas.jsonl"),
                 "--mappings", str(outdir / "mappings.csv"), "--store", str(store)]) == 0
    outfile = tmp_path / "wout.jsonl"
    errfile = tmp_path / "werr.jsonl"
    assert main(["map", "--store", str(store), "--in", str(outdir / "messages.jsonl"),
                 "--out", str(outfile), "--errors", str(errfile)]) == 0
    assert errfile.read_text() == ""


def test_mapping_a_stream_twice_is_byte_identical(tmp_path, golden_inputs):
    store = _init(tmp_path, golden_inputs)
    infile = tmp_path / "in.jsonl"
    infile.write_text(
        '{"schema": "s1", "version": 1, "payload": {"a1": "X", "a3": "Y"}}\n'
        '{"schema": "s2", "version": 1, "payload": {"a6": "Z"}}\n'
    )
    first, second = tmp_path / "one.jsonl", tmp_path / "two.jsonl"
    assert main(["map", "--store", str(store), "--in", str(infile), "--out", str(first)]) == 0
    assert main(["map", "--store", str(store), "--in", str(infile), "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_verify_command(capsys):
    assert main(["verify", "--seeds", "5", "--messages", "50"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 2


def test_usage_errors_exit_1(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["map"])  # missing --store
    assert exc.value.code == 1


def test_missing_store_is_state_error(tmp_path):
    assert main(["map", "--store", str(tmp_path / "none"), "--in", "/dev/null"]) == 2


def test_invalid_mapping_csv_is_validation_error(tmp_path, golden_inputs):
    schemas, _ = golden_inputs
    bad = tmp_path / "bad.csv"
    bad.write_text("nope\n")
    assert main(["init", "--schemas", str(schemas), "--mappings", str(bad),
                 "--store", str(tmp_path / "s")]) == 3
