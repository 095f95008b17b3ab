"""Engine configuration, the graph store and the command-line interface."""

import json

import numpy as np
import pytest

from gem.cli import main
from gem.engine import (
    EngineConfig,
    GraphStore,
    build_and_store,
    build_graph_for_corpus,
    compute_graph_id,
)
from gem.graph import graph_from_dict
from gem.providers import ProviderConfig
from gem.retrieval import RetrievalConfig, retrieve

from conftest import random_corpus

SMALL = dict(chunk_tokens=20, questions_per_node=2, num_components=2,
             top_members=3, budget_nodes=3)


class TestEngineConfig:
    def test_defaults(self):
        cfg = EngineConfig()
        assert cfg.chunk_tokens == 100
        assert cfg.questions_per_node == 5
        assert cfg.num_components == 2
        assert cfg.budget_nodes == 4
        assert cfg.embedder.kind == "mock"

    def test_dict_round_trip(self):
        cfg = EngineConfig(**SMALL, embedder=ProviderConfig(dim=64))
        back = EngineConfig.from_dict(cfg.to_dict())
        assert back == cfg

    def test_unknown_keys_rejected(self):
        with pytest.raises(ValueError, match="unknown config"):
            EngineConfig.from_dict({"chunk_tokens": 10, "typo_field": 1})

    def test_from_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"chunk_tokens": 33}), encoding="utf-8")
        cfg = EngineConfig.from_file(path)
        assert cfg.chunk_tokens == 33
        assert cfg.questions_per_node == 5

    def test_merged_skips_none(self):
        cfg = EngineConfig().merged(chunk_tokens=None, budget_nodes=7)
        assert cfg.chunk_tokens == 100
        assert cfg.budget_nodes == 7

    def test_validation(self):
        with pytest.raises(ValueError):
            EngineConfig(chunk_tokens=0)
        with pytest.raises(ValueError):
            EngineConfig(budget_nodes=0)
        with pytest.raises(ValueError):
            EngineConfig(synthesis_strategy="louvain")


class TestGraphId:
    def test_stable_across_calls(self):
        cfg = EngineConfig(**SMALL)
        text = random_corpus(1, 6, 20)
        assert compute_graph_id(text, cfg) == compute_graph_id(text, cfg)

    def test_sensitive_to_corpus(self):
        cfg = EngineConfig(**SMALL)
        assert compute_graph_id("text one", cfg) != compute_graph_id("text two", cfg)

    def test_sensitive_to_config(self):
        text = random_corpus(2, 6, 20)
        a = compute_graph_id(text, EngineConfig(**SMALL))
        b = compute_graph_id(text, EngineConfig(**{**SMALL, "chunk_tokens": 21}))
        assert a != b

    def test_sixteen_hex_chars(self):
        gid = compute_graph_id("t", EngineConfig())
        assert len(gid) == 16
        int(gid, 16)


class TestBuildGraphForCorpus:
    def test_counts_and_meta(self):
        cfg = EngineConfig(**SMALL)
        text = random_corpus(3, 6, cfg.chunk_tokens)
        graph, report = build_graph_for_corpus(text, cfg)
        assert graph.n == 6 + cfg.num_components
        meta = graph.build_meta
        assert meta["graph_id"] == compute_graph_id(text, cfg)
        assert meta["chunk_tokens"] == cfg.chunk_tokens
        assert meta["theme_count"] == report.theme_count
        assert meta["config"]["questions_per_node"] == 2
        assert len(meta["themes"]) == cfg.num_components

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            build_graph_for_corpus("   ", EngineConfig(**SMALL))

    def test_report_covers_chunk_graph_only(self):
        cfg = EngineConfig(**SMALL)
        text = random_corpus(4, 6, cfg.chunk_tokens)
        graph, report = build_graph_for_corpus(text, cfg)
        assert len(report.eigenvalues) == 6

    def test_components_clamped_to_node_count(self):
        cfg = EngineConfig(chunk_tokens=20, questions_per_node=1,
                           num_components=50, top_members=50)
        text = random_corpus(5, 3, cfg.chunk_tokens)
        graph, _ = build_graph_for_corpus(text, cfg)
        assert graph.n == 3 + 3

    def test_kmeans_strategy_builds_summaries(self):
        cfg = EngineConfig(**SMALL, synthesis_strategy="kmeans", seed=7)
        text = random_corpus(6, 6, cfg.chunk_tokens)
        graph, _ = build_graph_for_corpus(text, cfg)
        themes = graph.build_meta["themes"]
        assert all(t["strategy"] == "kmeans" for t in themes)
        member_ids = sorted(i for t in themes for i in t["member_ids"])
        assert member_ids == list(range(6))

    def test_sequential_matches_parallel(self):
        text = random_corpus(7, 5, 20)
        serial = EngineConfig(
            **SMALL,
            embedder=ProviderConfig(max_in_flight=1),
            generator=ProviderConfig(max_in_flight=1),
        )
        parallel = EngineConfig(
            **SMALL,
            embedder=ProviderConfig(max_in_flight=8),
            generator=ProviderConfig(max_in_flight=8),
        )
        g1, _ = build_graph_for_corpus(text, serial)
        g2, _ = build_graph_for_corpus(text, parallel)
        assert [n.text for n in g1.nodes] == [n.text for n in g2.nodes]
        # provider concurrency settings do not feed the graph id
        assert np.array_equal(g1.S, g2.S) or g1.S.shape == g2.S.shape
        assert [n.base_embedding.values for n in g1.nodes] == [
            n.base_embedding.values for n in g2.nodes
        ]


class TestGraphStore:
    def test_save_load_round_trip_preserves_retrieval(self, tmp_path, embedder):
        cfg = EngineConfig(**SMALL)
        text = random_corpus(8, 6, cfg.chunk_tokens)
        graph, _ = build_graph_for_corpus(text, cfg)
        store = GraphStore(tmp_path / "graphs")
        gid = store.save(graph)
        loaded = store.load(gid)
        assert np.array_equal(loaded.S, graph.S)
        rcfg = RetrievalConfig(budget_nodes=3)
        for prompt in ["zone facet motif", "altogether unrelated words"]:
            before = retrieve(graph, prompt, rcfg, embedder)
            after = retrieve(loaded, prompt, rcfg, embedder)
            assert before.to_dict() == after.to_dict()

    def test_unknown_id_raises_keyerror(self, tmp_path):
        store = GraphStore(tmp_path / "graphs")
        with pytest.raises(KeyError, match="unknown graph id"):
            store.load("feedfacefeedface")

    def test_invalid_id_rejected(self, tmp_path):
        store = GraphStore(tmp_path / "graphs")
        with pytest.raises(KeyError):
            store.path("../escape")

    def test_list_graphs_reports_meta(self, tmp_path):
        cfg = EngineConfig(**SMALL)
        store = GraphStore(tmp_path / "graphs")
        gid, graph, report = build_and_store(
            random_corpus(9, 5, cfg.chunk_tokens), cfg, store
        )
        rows = store.list_graphs()
        assert len(rows) == 1
        assert rows[0]["graph_id"] == gid
        assert rows[0]["n"] == graph.n
        assert rows[0]["theme_count"] == report.theme_count

    def test_build_and_store_reuses_existing(self, tmp_path):
        cfg = EngineConfig(**SMALL)
        text = random_corpus(10, 5, cfg.chunk_tokens)
        store = GraphStore(tmp_path / "graphs")
        gid1, graph1, report1 = build_and_store(text, cfg, store)
        mtime = store.path(gid1).stat().st_mtime_ns
        gid2, graph2, report2 = build_and_store(text, cfg, store)
        assert gid1 == gid2
        assert store.path(gid1).stat().st_mtime_ns == mtime
        assert np.array_equal(graph1.S, graph2.S)
        assert report1.eigenvalues == pytest.approx(report2.eigenvalues, abs=1e-12)


def _write_corpus(tmp_path, n_chunks=6, chunk_tokens=20, seed=0):
    path = tmp_path / "corpus.txt"
    path.write_text(random_corpus(seed, n_chunks, chunk_tokens), encoding="utf-8")
    return path


def _build_args(tmp_path, corpus_path):
    return [
        "build", "--corpus", str(corpus_path), "--store", str(tmp_path / "graphs"),
        "--chunk-tokens", "20", "--questions", "2", "--num-components", "2",
        "--top-members", "3",
    ]


class TestCli:
    def test_build_prints_summary_line(self, tmp_path, capsys):
        corpus = _write_corpus(tmp_path)
        assert main(_build_args(tmp_path, corpus)) == 0
        out = capsys.readouterr().out
        assert "graph_id=" in out
        assert "doc=corpus" in out
        assert "n=8" in out
        assert "distinctness=" in out

    def _built_graph_id(self, tmp_path, capsys, seed=0):
        corpus = _write_corpus(tmp_path, seed=seed)
        main(_build_args(tmp_path, corpus))
        out = capsys.readouterr().out
        return out.split("graph_id=")[1].split()[0]

    def test_spectrum_outputs_report_json(self, tmp_path, capsys):
        gid = self._built_graph_id(tmp_path, capsys)
        assert main(["spectrum", gid, "--store", str(tmp_path / "graphs")]) == 0
        data = json.loads(capsys.readouterr().out)
        assert len(data["eigenvalues"]) == 8
        assert data["eigenvalues"][0] == pytest.approx(1.0, abs=1e-6)
        assert "theme_count" in data and "distinctness" in data

    def test_retrieve_outputs_result_json(self, tmp_path, capsys):
        gid = self._built_graph_id(tmp_path, capsys)
        assert main([
            "retrieve", gid, "--store", str(tmp_path / "graphs"),
            "--prompt", "zone facet motif", "--budget", "3",
        ]) == 0
        data = json.loads(capsys.readouterr().out)
        assert len(data["node_ids"]) == 3
        assert data["strategy"] == "gem_greedy"
        assert len(data["matched_questions"]) == 3

    def test_ask_outputs_answer_and_context(self, tmp_path, capsys):
        gid = self._built_graph_id(tmp_path, capsys)
        assert main([
            "ask", gid, "--store", str(tmp_path / "graphs"),
            "--prompt", "zone facet motif", "--budget", "2",
        ]) == 0
        data = json.loads(capsys.readouterr().out)
        assert set(data) == {"answer", "context", "retrieval"}
        assert "[source 1:" in data["context"]
        assert isinstance(data["answer"], str) and data["answer"]

    def test_export_with_and_without_vectors(self, tmp_path, capsys):
        gid = self._built_graph_id(tmp_path, capsys)
        full = tmp_path / "full.json"
        bare = tmp_path / "bare.json"
        assert main(["export", gid, "--store", str(tmp_path / "graphs"),
                     "--out", str(full)]) == 0
        assert main(["export", gid, "--store", str(tmp_path / "graphs"),
                     "--out", str(bare), "--no-vectors"]) == 0
        full_data = json.loads(full.read_text(encoding="utf-8"))
        bare_data = json.loads(bare.read_text(encoding="utf-8"))
        assert full_data["nodes"][0]["base_embedding"] is not None
        assert bare_data["nodes"][0]["base_embedding"] is None
        assert graph_from_dict(full_data).n == 8

    def test_retrieve_accepts_graph_file_path(self, tmp_path, capsys):
        gid = self._built_graph_id(tmp_path, capsys)
        exported = tmp_path / "graph.json"
        main(["export", gid, "--store", str(tmp_path / "graphs"),
              "--out", str(exported)])
        capsys.readouterr()
        assert main(["retrieve", str(exported), "--prompt", "zone facet"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["node_ids"]

    def test_eval_prints_metrics(self, tmp_path, capsys):
        docs = {
            "solar": "The star burns hydrogen. The corona glows violet. "
                     "Fusion peaks at dawn. The telescope records plasma arcs.",
            "farm": "The orchard grows pears. The tractor tills loam. "
                    "Harvest ends in october. The granary stores barley.",
        }
        lines = [
            {"doc_id": "solar", "question": "What does the corona do?",
             "options": ["The corona glows violet", "The corona sells grain"],
             "gold": 0},
            {"doc_id": "farm", "question": "What does the orchard grow?",
             "options": ["pears grow in the orchard", "code grows"],
             "gold": 0, "is_hard": True},
        ]
        dataset = tmp_path / "qa.jsonl"
        dataset.write_text("\n".join(json.dumps(l) for l in lines),
                           encoding="utf-8")
        (tmp_path / "qa.docs.json").write_text(json.dumps(docs), encoding="utf-8")
        report_path = tmp_path / "report.json"
        assert main([
            "eval", "--dataset", str(dataset), "--chunk-tokens", "10",
            "--questions", "2", "--num-components", "1", "--top-members", "2",
            "--budget", "2", "--report", str(report_path),
        ]) == 0
        out = capsys.readouterr().out
        assert "records=2 failed=0" in out
        assert "accuracy=1.0000" in out
        assert "hard_accuracy=1.0000" in out
        report = json.loads(report_path.read_text(encoding="utf-8"))
        assert report["n_records"] == 2

    def test_eval_with_store_caches_graphs(self, tmp_path, capsys):
        docs = {"only": "alpha beta gamma delta. epsilon zeta eta theta. "
                        "iota kappa lambda mu. nu xi omicron pi."}
        lines = [{"doc_id": "only", "question": "alpha beta?",
                  "options": ["alpha beta gamma", "unrelated"], "gold": 0}]
        dataset = tmp_path / "qa.jsonl"
        dataset.write_text("\n".join(json.dumps(l) for l in lines), encoding="utf-8")
        (tmp_path / "qa.docs.json").write_text(json.dumps(docs), encoding="utf-8")
        store_dir = tmp_path / "cache"
        args = ["eval", "--dataset", str(dataset), "--store", str(store_dir),
                "--chunk-tokens", "8", "--questions", "1",
                "--num-components", "1", "--top-members", "2", "--budget", "2"]
        assert main(args) == 0
        cached = list(store_dir.glob("*.json"))
        assert len(cached) == 1
        assert main(args) == 0
        assert list(store_dir.glob("*.json")) == cached

    def test_config_file_with_flag_override(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(
            json.dumps({"chunk_tokens": 50, "questions_per_node": 1,
                        "num_components": 1, "top_members": 2}),
            encoding="utf-8",
        )
        corpus = _write_corpus(tmp_path, n_chunks=4, chunk_tokens=20)
        assert main([
            "build", "--corpus", str(corpus), "--store", str(tmp_path / "graphs"),
            "--config", str(cfg_path), "--chunk-tokens", "20",
        ]) == 0
        out = capsys.readouterr().out
        # flag wins over the file: 4 chunks of 20 plus 1 summary
        assert "n=5" in out

    def test_empty_corpus_exits_nonzero(self, tmp_path, capsys):
        empty = tmp_path / "empty.txt"
        empty.write_text("   ", encoding="utf-8")
        code = main(["build", "--corpus", str(empty),
                     "--store", str(tmp_path / "graphs")])
        assert code == 1
        assert "error:" in capsys.readouterr().err

    def test_unknown_graph_exits_nonzero(self, tmp_path, capsys):
        code = main(["retrieve", "deadbeefdeadbeef",
                     "--store", str(tmp_path / "graphs"), "--prompt", "x"])
        assert code == 1
        err = capsys.readouterr().err
        assert "deadbeefdeadbeef" in err

    def test_json_corpus_builds_multiple_docs(self, tmp_path, capsys):
        corpus = tmp_path / "docs.json"
        corpus.write_text(json.dumps({
            "a": random_corpus(11, 4, 20),
            "b": random_corpus(12, 4, 20),
        }), encoding="utf-8")
        assert main([
            "build", "--corpus", str(corpus), "--store", str(tmp_path / "graphs"),
            "--chunk-tokens", "20", "--questions", "1",
            "--num-components", "1", "--top-members", "2",
        ]) == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert len(out) == 2
        assert "doc=a" in out[0] and "doc=b" in out[1]
