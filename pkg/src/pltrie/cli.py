"""Command-line front end.

Results go to stdout as key-value lines (or to --out files, written via a
temp file and atomic rename); diagnostics go to stderr.  Exit codes: 0 on
success, 1 for usage errors, 2 for data or format errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction

from .cachesim import (
    CostModel,
    WorkloadSpec,
    break_even,
    coverage_log_approx,
    simulate,
    zipf_coverage,
)
from .codec import Bitstream, decode_bits, decode_interval, encode_bits, encode_interval
from .errors import ModelFormatError, PltError
from .hybrid import (
    description_length,
    load_archive,
    lossy_pack,
    pack,
    serialize_archive,
    unpack,
)
from .model import (
    NgramModel,
    PolicyModel,
    TableModel,
    Vocabulary,
    ZipfModel,
    format_rational,
    load_model,
    ngram_model,
    parse_model,
    zipf_model,
)
from .trie import Plt, materialize

_MODEL_KINDS = {
    "table": TableModel,
    "ngram": NgramModel,
    "zipf": ZipfModel,
    "policy": PolicyModel,
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _rational(text: str) -> Fraction:
    return Fraction(text)


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise ValueError("must be positive")
    return value


def _atomic_write(path: str, data) -> None:
    """Write whole files via rename so readers never observe partial output."""
    tmp = f"{path}.tmp{os.getpid()}"
    binary = isinstance(data, bytes)
    try:
        with open(tmp, "wb" if binary else "w", encoding=None if binary else "utf-8") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        _atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


def _parse_data_token(vocab: Vocabulary, part: str) -> int:
    # "#<id>" names a raw token id, the only spelling for ids outside the
    # vocabulary (archives may carry them).
    if part.startswith("#"):
        try:
            token = int(part[1:])
        except ValueError:
            raise ModelFormatError(f"bad raw token {part!r}") from None
        if token < 0:
            raise ModelFormatError(f"negative token id in {part!r}")
        return token
    return vocab.token_id(part)


def _parse_dataset(vocab: Vocabulary, text: str) -> list[tuple[int, ...]]:
    dataset = []
    for line in text.splitlines():
        parts = line.replace(",", " ").split()
        dataset.append(tuple(_parse_data_token(vocab, p) for p in parts))
    return dataset


def _format_dataset(vocab: Vocabulary, dataset) -> str:
    lines = []
    for seq in dataset:
        parts = [
            vocab.token_name(t) if 0 <= t < vocab.size else f"#{t}" for t in seq
        ]
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def _read_text(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _read_bytes(path: str) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


# ---------------------------------------------------------------------------
# commands


def _cmd_model_build(args) -> int:
    if args.input is not None:
        model = parse_model(_read_text(args.input))
        want = _MODEL_KINDS[args.kind]
        if not isinstance(model, want):
            raise ModelFormatError(
                f"input file holds a {type(model).__name__}, not kind {args.kind!r}"
            )
    elif args.kind == "ngram":
        if not (args.vocab and args.corpus and args.order and args.smoothing is not None):
            raise _UsageError("ngram needs --vocab, --corpus, --order, --smoothing")
        vocab = Vocabulary(tuple(args.vocab.replace(",", " ").split()))
        corpus = [
            tuple(vocab.token_id(p) for p in line.replace(",", " ").split())
            for line in _read_text(args.corpus).splitlines()
        ]
        model = ngram_model(vocab, corpus, args.order, args.smoothing)
    elif args.kind == "zipf":
        if not (args.items and args.alpha is not None):
            raise _UsageError("zipf needs --items and --alpha")
        if args.alpha < 0:
            raise _UsageError("--alpha must be >= 0")
        model = zipf_model(args.items, args.alpha)
    else:
        raise _UsageError(f"kind {args.kind!r} needs --input with a model document")
    _atomic_write(args.out, model.serialize())
    return 0


def _cmd_trie_dump(args) -> int:
    model = load_model(args.model)
    if args.max_depth < 0:
        raise _UsageError("--max-depth must be >= 0")
    if not 0 <= args.prune_threshold <= 1:
        raise _UsageError("--prune-threshold must lie in [0, 1]")
    plt = materialize(model, args.max_depth, args.prune_threshold)
    _emit(args, plt.dump())
    return 0


def _cmd_encode(args) -> int:
    model = load_model(args.model)
    seq = model.vocabulary.parse_tokens(args.seq)
    interval, bits = encode_interval(model, seq)
    stream = encode_bits(model, seq)
    sys.stdout.write(f"low {format_rational(interval.low)}\n")
    sys.stdout.write(f"high {format_rational(interval.high)}\n")
    sys.stdout.write(f"bits {bits}\n")
    sys.stdout.write(f"record_bits {stream.bit_count}\n")
    sys.stdout.write(f"record {stream.to_record().hex()}\n")
    if args.out:
        _atomic_write(args.out, stream.to_record())
    return 0


def _cmd_decode(args) -> int:
    model = load_model(args.model)
    if (args.point is None) == (args.record is None):
        raise _UsageError("give exactly one of --point or --record")
    if args.point is not None:
        seq = decode_interval(model, args.point, max_len=args.max_len)
    else:
        buf = _read_bytes(args.record)
        stream, consumed = Bitstream.from_record(buf)
        if consumed != len(buf):
            raise ModelFormatError(f"{len(buf) - consumed} trailing bytes after record")
        seq = decode_bits(model, stream, max_len=args.max_len)
    shown = model.vocabulary.format_tokens(seq)
    sys.stdout.write(f"seq {shown}\n" if shown else "seq\n")
    return 0


def _cmd_pack(args) -> int:
    model = load_model(args.model)
    dataset = _parse_dataset(model.vocabulary, _read_text(args.data))
    if args.epsilon <= 0 or args.epsilon >= 1:
        raise _UsageError("--epsilon must lie in (0, 1)")
    try:
        if args.lossy:
            archive, _ = lossy_pack(model, Plt(model), dataset, args.tau, args.epsilon)
        else:
            archive = pack(model, dataset, args.tau, args.epsilon)
    except ValueError as exc:  # e.g. lossy with nothing covered: a data problem
        raise PltError(str(exc)) from None
    payload = serialize_archive(archive)
    _atomic_write(args.out, payload)
    sys.stdout.write(f"covered {len(archive.covered)}\n")
    sys.stdout.write(f"residual {len(archive.residual)}\n")
    sys.stdout.write(f"bytes {len(payload)}\n")
    return 0


def _cmd_unpack(args) -> int:
    archive = load_archive(args.archive)
    text = _format_dataset(archive.model.vocabulary, unpack(archive))
    _emit(args, text)
    return 0


def _cmd_dl_report(args) -> int:
    report = description_length(load_archive(args.archive))
    if args.format == "csv":
        rows = [line.replace(" ", ",", 1) for line in report.lines()]
        _emit(args, "\n".join(["key,value", *rows]) + "\n")
    else:
        _emit(args, "\n".join(report.lines()) + "\n")
    return 0


def _require(cfg: dict, key: str) -> str:
    if key not in cfg:
        raise ModelFormatError(f"config is missing required key {key!r}")
    return cfg[key]


_CONFIG_KEYS = {
    "items",
    "alpha",
    "probs",
    "horizon",
    "seed",
    "capacity",
    "replications",
    "policies",
    "compute_cost",
    "lookup_cost",
    "storage_cost",
    "beta",
    "delta",
    "samples",
}


def _parse_config(text: str) -> dict[str, str]:
    cfg: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ModelFormatError(f"config line {lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ModelFormatError(f"config line {lineno}: unknown key {key!r}")
        if key in cfg:
            raise ModelFormatError(f"config line {lineno}: duplicate key {key!r}")
        cfg[key] = value
    return cfg


def _spec_from_config(cfg: dict[str, str]) -> WorkloadSpec:
    try:
        horizon = int(_require(cfg, "horizon"))
        seed = int(_require(cfg, "seed"))
        if "probs" in cfg:
            if "items" in cfg or "alpha" in cfg:
                raise ValueError("give either explicit probs or (items, alpha), not both")
            probs = tuple(Fraction(p) for p in cfg["probs"].replace(",", " ").split())
            return WorkloadSpec(horizon=horizon, seed=seed, probs=probs)
        return WorkloadSpec(
            horizon=horizon,
            seed=seed,
            items=int(_require(cfg, "items")),
            alpha=Fraction(_require(cfg, "alpha")),
        )
    except ValueError as exc:
        raise ModelFormatError(f"bad workload config: {exc}") from None


def _cmd_simulate(args) -> int:
    cfg = _parse_config(_read_text(args.config))
    spec = _spec_from_config(cfg)
    try:
        cost = CostModel(
            compute=Fraction(_require(cfg, "compute_cost")),
            lookup=Fraction(_require(cfg, "lookup_cost")),
            storage=Fraction(cfg.get("storage_cost", "0")),
        )
        policies = tuple(_require(cfg, "policies").replace(",", " ").split())
        samples = None
        if "samples" in cfg:
            samples = [int(t) for t in cfg["samples"].replace(",", " ").split()]
        report = simulate(
            spec,
            capacity=int(_require(cfg, "capacity")),
            cost=cost,
            policies=policies,
            replications=int(_require(cfg, "replications")),
            beta=float(Fraction(cfg.get("beta", "1"))),
            sample_steps=samples,
            delta=Fraction(cfg.get("delta", "1/2")),
        )
    except ValueError as exc:
        raise ModelFormatError(f"bad simulation config: {exc}") from None
    _emit(args, report.to_csv() if args.format == "csv" else report.to_text())
    return 0


def _cmd_coverage(args) -> int:
    if args.capacity > args.items:
        raise _UsageError("--capacity must not exceed --items")
    if args.alpha < 0:
        raise _UsageError("--alpha must be >= 0")
    value = zipf_coverage(args.capacity, args.items, args.alpha)
    sys.stdout.write(f"coverage {value:.10g}\n")
    if args.capacity >= 2 and args.items >= 2:
        sys.stdout.write(f"log_approx {coverage_log_approx(args.capacity, args.items):.10g}\n")
    return 0


def _cmd_breakeven(args) -> int:
    try:
        cost = CostModel(compute=args.compute_cost, lookup=args.lookup_cost)
        value = break_even(args.covered_size, cost, args.p_star)
    except ValueError as exc:
        raise _UsageError(str(exc)) from None
    sys.stdout.write(f"t_break {value:.10g}\n")
    return 0


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> _Parser:
    parser = _Parser(prog="pltrie", description="Probability-trie coding and cache tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("model-build", help="construct or canonicalize a model file")
    p.add_argument("--kind", required=True, choices=sorted(_MODEL_KINDS))
    p.add_argument("--out", required=True)
    p.add_argument("--input", help="existing model document to validate and canonicalize")
    p.add_argument("--vocab", help="ngram: space-separated token names")
    p.add_argument("--corpus", help="ngram: training sequences, one per line")
    p.add_argument("--order", type=_positive_int)
    p.add_argument("--smoothing", type=_rational)
    p.add_argument("--items", type=_positive_int)
    p.add_argument("--alpha", type=_rational)
    p.set_defaults(func=_cmd_model_build)

    p = sub.add_parser("trie-dump", help="materialize a trie and print it")
    p.add_argument("--model", required=True)
    p.add_argument("--max-depth", type=int, required=True)
    p.add_argument("--prune-threshold", type=_rational, default=Fraction(0))
    p.add_argument("--out")
    p.set_defaults(func=_cmd_trie_dump)

    p = sub.add_parser("encode", help="interval- and bit-encode one sequence")
    p.add_argument("--model", required=True)
    p.add_argument("--seq", required=True)
    p.add_argument("--out", help="write the binary record here as well")
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("decode", help="recover a sequence from a point or record")
    p.add_argument("--model", required=True)
    p.add_argument("--point", type=_rational)
    p.add_argument("--record", help="file holding one binary record")
    p.add_argument("--max-len", type=_positive_int, default=4096)
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("pack", help="archive a dataset against a model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--tau", type=_positive_int, required=True)
    p.add_argument("--epsilon", type=_rational, default=Fraction(1, 256))
    p.add_argument("--lossy", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_pack)

    p = sub.add_parser("unpack", help="restore the dataset from an archive")
    p.add_argument("--archive", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_unpack)

    p = sub.add_parser("dl-report", help="description-length accounting of an archive")
    p.add_argument("--archive", required=True)
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_dl_report)

    p = sub.add_parser("simulate", help="run a cache-policy campaign from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--format", choices=("csv", "text"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("coverage", help="power-law mass captured by a top-K cache")
    p.add_argument("--capacity", type=_positive_int, required=True)
    p.add_argument("--items", type=_positive_int, required=True)
    p.add_argument("--alpha", type=_rational, required=True)
    p.set_defaults(func=_cmd_coverage)

    p = sub.add_parser("breakeven", help="requests until caching repays its build cost")
    p.add_argument("--covered-size", type=_positive_int, required=True)
    p.add_argument("--compute-cost", type=_rational, required=True)
    p.add_argument("--lookup-cost", type=_rational, default=Fraction(0))
    p.add_argument("--p-star", type=_rational, required=True)
    p.set_defaults(func=_cmd_breakeven)

    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (PltError, OSError, UnicodeDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
