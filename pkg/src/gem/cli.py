"""Command-line front end: build, inspect, query, evaluate, serve."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .engine import (
    EngineConfig,
    GraphStore,
    build_and_store,
    build_graph_for_corpus,
)
from .evalqa import FORMATS, SIMPLE, load_dataset, run_eval
from .graph import GemGraph, graph_from_dict, graph_to_dict
from .providers import ProviderConfig, ProviderError, build_embedder, build_generator
from .retrieval import (
    GEM_GREEDY,
    STRATEGIES,
    RetrievalConfig,
    assemble_context,
    retrieve,
)
from .spectral import decompose, laplacian
from .synthesis import EIGEN, KMEANS

DEFAULT_STORE = "graphs"


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("engine configuration")
    group.add_argument("--config", help="JSON config file; flags override it")
    group.add_argument("--chunk-tokens", type=int, dest="chunk_tokens")
    group.add_argument("--questions", type=int, dest="questions_per_node",
                       help="utility questions per node")
    group.add_argument("--num-components", type=int, dest="num_components",
                       help="summary nodes to synthesize")
    group.add_argument("--top-members", type=int, dest="top_members",
                       help="chunks summarized per theme")
    group.add_argument("--budget", type=int, dest="budget_nodes")
    group.add_argument("--cutoff", type=float, dest="gap_cutoff")
    group.add_argument("--beta-close", type=float, dest="beta_close")
    group.add_argument("--skip-top", action="store_true", default=None,
                       dest="skip_top",
                       help="skip the leading eigenvector when picking themes")
    group.add_argument("--synthesis", choices=(EIGEN, KMEANS),
                       dest="synthesis_strategy")
    group.add_argument("--seed", type=int, dest="seed")
    prov = parser.add_argument_group("providers")
    prov.add_argument("--provider", choices=("mock", "http"),
                      help="backend kind for both embedder and generator")
    prov.add_argument("--embed-endpoint")
    prov.add_argument("--embed-model")
    prov.add_argument("--gen-endpoint")
    prov.add_argument("--gen-model")
    prov.add_argument("--api-key-env", help="env var holding the bearer token")
    prov.add_argument("--dim", type=int, help="mock embedding dimension")
    prov.add_argument("--max-in-flight", type=int)


def _provider_overrides(base: ProviderConfig, args, endpoint, model) -> ProviderConfig:
    fields = {}
    if args.provider is not None:
        fields["kind"] = args.provider
    if endpoint is not None:
        fields["endpoint"] = endpoint
    if model is not None:
        fields["model_name"] = model
    if args.api_key_env is not None:
        fields["api_key_env"] = args.api_key_env
    if args.dim is not None:
        fields["dim"] = args.dim
    if args.max_in_flight is not None:
        fields["max_in_flight"] = args.max_in_flight
    return replace(base, **fields) if fields else base


def _resolve_config(args) -> EngineConfig:
    config = (
        EngineConfig.from_file(args.config) if args.config else EngineConfig()
    )
    config = config.merged(
        chunk_tokens=args.chunk_tokens,
        questions_per_node=args.questions_per_node,
        num_components=args.num_components,
        top_members=args.top_members,
        budget_nodes=args.budget_nodes,
        gap_cutoff=args.gap_cutoff,
        beta_close=args.beta_close,
        skip_top=args.skip_top,
        synthesis_strategy=args.synthesis_strategy,
        seed=args.seed,
    )
    return replace(
        config,
        embedder=_provider_overrides(
            config.embedder, args, args.embed_endpoint, args.embed_model
        ),
        generator=_provider_overrides(
            config.generator, args, args.gen_endpoint, args.gen_model
        ),
    )


def _load_corpus(path: Path) -> dict[str, str]:
    """Plain text file -> one document; JSON object -> doc_id to text map."""
    if path.suffix == ".json":
        data = json.loads(path.read_text(encoding="utf-8"))
        if not isinstance(data, dict) or not all(
            isinstance(v, str) for v in data.values()
        ):
            raise ValueError("corpus JSON must map document ids to text")
        return {str(k): v for k, v in data.items()}
    return {path.stem: path.read_text(encoding="utf-8")}


def _load_graph_arg(graph_arg: str, store_dir: str) -> GemGraph:
    path = Path(graph_arg)
    if path.exists():
        return graph_from_dict(json.loads(path.read_text(encoding="utf-8")))
    store = GraphStore(store_dir)
    if store.exists(graph_arg):
        return store.load(graph_arg)
    raise FileNotFoundError(
        f"{graph_arg!r} is neither a graph JSON file nor an id in {store_dir!r}"
    )


def _graph_providers(graph: GemGraph, args):
    """Recreate the providers the graph was built with, unless overridden."""
    config_block = graph.build_meta.get("config", {})
    embed_config = ProviderConfig.from_dict(config_block.get("embedder", {}))
    gen_config = ProviderConfig.from_dict(config_block.get("generator", {}))
    embed_config = _provider_overrides(
        embed_config, args, args.embed_endpoint, args.embed_model
    )
    gen_config = _provider_overrides(
        gen_config, args, args.gen_endpoint, args.gen_model
    )
    return build_embedder(embed_config), build_generator(gen_config)


def _cmd_build(args) -> int:
    config = _resolve_config(args)
    store = GraphStore(args.store)
    documents = _load_corpus(Path(args.corpus))
    for doc_id, text in documents.items():
        graph_id, graph, report = build_and_store(text, config, store)
        print(
            f"graph_id={graph_id} doc={doc_id} n={graph.n} "
            f"themes={report.theme_count} distinctness={report.distinctness:.4f}"
        )
    return 0


def _cmd_spectrum(args) -> int:
    graph = _load_graph_arg(args.graph, args.store)
    cutoff = args.gap_cutoff if args.gap_cutoff is not None else 0.5
    beta_close = args.beta_close if args.beta_close is not None else 0.7
    report = decompose(laplacian(graph.S), c=cutoff, beta_close=beta_close)
    print(json.dumps(report.to_dict(include_vectors=args.vectors), indent=2))
    return 0


def _retrieval_config(args) -> RetrievalConfig:
    return RetrievalConfig(
        budget_nodes=args.budget if args.budget is not None else 4,
        strategy=args.strategy,
        edge_bias=args.edge_bias,
    )


def _cmd_retrieve(args) -> int:
    graph = _load_graph_arg(args.graph, args.store)
    embedder, _ = _graph_providers(graph, args)
    result = retrieve(graph, args.prompt, _retrieval_config(args), embedder)
    print(json.dumps(result.to_dict(), indent=2))
    return 0


def _cmd_ask(args) -> int:
    graph = _load_graph_arg(args.graph, args.store)
    embedder, generator = _graph_providers(graph, args)
    config = _retrieval_config(args)
    result = retrieve(graph, args.prompt, config, embedder)
    chunk_tokens = int(graph.build_meta.get("chunk_tokens", 100))
    context = assemble_context(
        graph, result, max_tokens=config.budget_nodes * chunk_tokens
    )
    answer = generator.answer(args.prompt, [context] if context else [" "])
    print(
        json.dumps(
            {"answer": answer, "context": context, "retrieval": result.to_dict()},
            indent=2,
        )
    )
    return 0


def _cmd_eval(args) -> int:
    config = _resolve_config(args)
    records, documents = load_dataset(args.dataset, args.format)
    if args.limit_docs is not None:
        keep = set(list(documents)[: args.limit_docs])
        documents = {k: v for k, v in documents.items() if k in keep}
        records = [r for r in records if r.doc_id in keep]
    embedder = build_embedder(config.embedder)
    generator = build_generator(config.generator)
    store = GraphStore(args.store) if args.store else None
    graphs = {}
    for doc_id, text in documents.items():
        try:
            if store is not None:
                _, graph, _ = build_and_store(text, config, store)
            else:
                graph, _ = build_graph_for_corpus(
                    text, config, embedder=embedder, generator=generator
                )
            graphs[doc_id] = graph
        except (ValueError, ProviderError) as exc:
            print(f"build failed for doc {doc_id}: {exc}", file=sys.stderr)
    report = run_eval(
        records,
        graphs,
        RetrievalConfig(
            budget_nodes=config.budget_nodes,
            strategy=args.strategy,
            edge_bias=args.edge_bias,
        ),
        embedder,
        generator,
        skip_missing=args.skip_missing,
        context_tokens=config.budget_nodes * config.chunk_tokens,
    )
    print(f"records={report.n_records} failed={report.n_failed}")
    print(f"accuracy={report.accuracy:.4f} hard_accuracy={report.hard_accuracy:.4f}")
    print(f"f1={report.f1:.4f} eigen_fraction={report.eigen_fraction:.4f}")
    if args.report:
        Path(args.report).write_text(
            json.dumps(report.to_dict(), indent=2), encoding="utf-8"
        )
        print(f"report written to {args.report}")
    return 0


def _cmd_export(args) -> int:
    graph = _load_graph_arg(args.graph, args.store)
    payload = graph_to_dict(graph, include_vectors=not args.no_vectors)
    Path(args.out).write_text(json.dumps(payload), encoding="utf-8")
    print(f"exported {args.graph} to {args.out}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = _resolve_config(args)
    app = create_app(GraphStore(args.store), config)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gem",
        description="Build and query eigentheme memory graphs over text corpora.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="build and persist graphs for a corpus")
    p_build.add_argument("--corpus", required=True,
                         help="text file, or JSON mapping doc ids to text")
    p_build.add_argument("--store", default=DEFAULT_STORE)
    _add_config_args(p_build)
    p_build.set_defaults(func=_cmd_build)

    p_spec = sub.add_parser("spectrum", help="print the eigensystem report")
    p_spec.add_argument("graph", help="graph JSON path or stored graph id")
    p_spec.add_argument("--store", default=DEFAULT_STORE)
    p_spec.add_argument("--cutoff", type=float, dest="gap_cutoff", default=None)
    p_spec.add_argument("--beta-close", type=float, dest="beta_close", default=None)
    p_spec.add_argument("--vectors", action="store_true",
                        help="include eigenvectors in the output")
    p_spec.set_defaults(func=_cmd_spectrum)

    for name, fn, with_prompt in (
        ("retrieve", _cmd_retrieve, True),
        ("ask", _cmd_ask, True),
    ):
        p = sub.add_parser(name, help=f"{name} against a stored graph")
        p.add_argument("graph", help="graph JSON path or stored graph id")
        p.add_argument("--store", default=DEFAULT_STORE)
        p.add_argument("--prompt", required=with_prompt)
        p.add_argument("--budget", type=int, default=None)
        p.add_argument("--strategy", choices=STRATEGIES, default=GEM_GREEDY)
        p.add_argument("--edge-bias", type=float, default=0.0)
        p.add_argument("--provider", choices=("mock", "http"), default=None)
        p.add_argument("--embed-endpoint", default=None)
        p.add_argument("--embed-model", default=None)
        p.add_argument("--gen-endpoint", default=None)
        p.add_argument("--gen-model", default=None)
        p.add_argument("--api-key-env", default=None)
        p.add_argument("--dim", type=int, default=None)
        p.add_argument("--max-in-flight", type=int, default=None)
        p.set_defaults(func=fn)

    p_eval = sub.add_parser("eval", help="run QA evaluation over a dataset")
    p_eval.add_argument("--dataset", required=True)
    p_eval.add_argument("--format", choices=FORMATS, default=SIMPLE)
    p_eval.add_argument("--strategy", choices=STRATEGIES, default=GEM_GREEDY)
    p_eval.add_argument("--edge-bias", type=float, default=0.0)
    p_eval.add_argument("--report", help="write the full report JSON here")
    p_eval.add_argument("--store", default=None,
                        help="optional graph cache directory")
    p_eval.add_argument("--skip-missing", action="store_true")
    p_eval.add_argument("--limit-docs", type=int, default=None)
    _add_config_args(p_eval)
    p_eval.set_defaults(func=_cmd_eval)

    p_export = sub.add_parser("export", help="write a graph JSON for the UI")
    p_export.add_argument("graph", help="graph JSON path or stored graph id")
    p_export.add_argument("--store", default=DEFAULT_STORE)
    p_export.add_argument("--out", required=True)
    p_export.add_argument("--no-vectors", action="store_true",
                          help="omit embedding vectors (display-only export)")
    p_export.set_defaults(func=_cmd_export)

    p_serve = sub.add_parser("serve", help="serve graphs over HTTP")
    p_serve.add_argument("--store", default=DEFAULT_STORE)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    _add_config_args(p_serve)
    p_serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProviderError as exc:
        print(f"provider failure at stage {exc.stage}: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
