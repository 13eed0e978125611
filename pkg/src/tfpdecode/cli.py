"""Command-line interface: ``tfp {decode,eval,synth,energy}``.

Exit codes: 0 on success, 1 on runtime/data errors, 2 on usage errors.
"""

import argparse
import logging
import sys
import time

import numpy as np

from . import _kernels
from .alignment import cosine_sim, csls, pad_square, sinkhorn
from .decoder import DecodeConfig, decode
from .energy import dirichlet_energy
from .errors import DataError, TFPError
from .flow import SeedMask, iterate_fp
from .kg import (
    DatasetPair,
    SeedAlignment,
    load_embeddings,
    load_pairs,
    load_triples,
    write_dataset,
    write_embeddings,
)
from .metrics import hits_at_k, mrr, ranks
from .sparse import sym_normalize
from .synth import generate_kg, make_pair
from .views import undirected_adjacency

log = logging.getLogger("tfpdecode")

HISTORY_CHOICES = {"concat": "concat_history", "last": "last_iterate"}


class StageError(Exception):
    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


class _Stages:
    """Runs named blocks, recording wall time and tagging failures with the stage."""

    def __init__(self):
        self.times = {}

    def __call__(self, name, fn, *args, **kwargs):
        t0 = time.perf_counter()
        try:
            return fn(*args, **kwargs)
        except (TFPError, OSError, ValueError) as exc:
            raise StageError(name, exc) from exc
        finally:
            self.times[name] = self.times.get(name, 0.0) + time.perf_counter() - t0


def _int_list(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("k values must be >= 1")
    return values


def cmd_decode(args):
    stages = _Stages()
    dtype = np.dtype(args.dtype)
    xs = stages("load", load_embeddings, args.src_emb, dtype=dtype)
    xt = stages("load", load_embeddings, args.tgt_emb, dtype=dtype)
    src = stages("load", load_triples, args.src_triples, n_entities=xs.shape[0])
    tgt = stages("load", load_triples, args.tgt_triples, n_entities=xt.shape[0])
    train = stages("load", load_pairs, args.train_pairs)
    dataset = stages(
        "load", lambda: DatasetPair(src, tgt, SeedAlignment(train, np.zeros((0, 2))), xs, xt)
    )
    cfg = stages(
        "config",
        DecodeConfig,
        iterations=args.iters,
        relation_dim=args.dr,
        entity_dim=args.de,
        rng_seed=args.seed,
        history_mode=HISTORY_CHOICES[args.history],
        seed_features=args.seed_features,
        dtype=args.dtype,
    )
    timings = {}
    t0 = time.perf_counter()
    try:
        out_src, out_tgt = decode(dataset, cfg, timings=timings)
    except (TFPError, ValueError) as exc:
        stage = getattr(exc, "stage", None) or "decode"
        raise StageError(stage, exc) from exc
    stages.times["decode"] = time.perf_counter() - t0
    stages("write", write_embeddings, args.out_src, out_src)
    stages("write", write_embeddings, args.out_tgt, out_tgt)

    for name in ("load", "views", "propagation", "projection", "tensor", "write"):
        seconds = timings.get(name, stages.times.get(name))
        if seconds is not None:
            print(f"stage {name:<12s} {seconds:8.3f}s")
    print(f"output src {out_src.shape[0]}x{out_src.shape[1]}  tgt {out_tgt.shape[0]}x{out_tgt.shape[1]}")
    print(f"total {sum(stages.times.values()):.3f}s")
    return 0


def cmd_eval(args):
    stages = _Stages()
    xs = stages("load", load_embeddings, args.src_features)
    xt = stages("load", load_embeddings, args.tgt_features)
    test = stages("load", load_pairs, args.test_pairs)
    if test.size == 0:
        raise StageError("load", DataError("test pair file is empty"))
    if test[:, 0].max() >= xs.shape[0] or test[:, 1].max() >= xt.shape[0]:
        raise StageError(
            "load",
            DataError(
                f"test pairs reference rows beyond the feature matrices "
                f"({xs.shape[0]} src rows, {xt.shape[0]} tgt rows)"
            ),
        )
    if xs.shape[1] != xt.shape[1]:
        raise StageError("load", DataError(f"feature widths differ: {xs.shape[1]} vs {xt.shape[1]}"))

    t0 = time.perf_counter()
    sim = stages("alignment", cosine_sim, xs[test[:, 0]], xt[test[:, 1]])
    if args.decoder == "csls":
        scores = stages("alignment", csls, sim, min(args.csls_k, min(sim.shape)))
    elif args.decoder == "sinkhorn":
        scores = stages("alignment", lambda: sinkhorn(pad_square(sim), args.tau, args.sinkhorn_iters))
    else:
        scores = sim
    truth = np.column_stack([np.arange(len(test)), np.arange(len(test))])
    r = stages("metrics", ranks, scores, truth)
    seconds = time.perf_counter() - t0

    ks = sorted(set(args.k) | {1, 10})
    hits = {k: hits_at_k(r, k) for k in ks}
    score = mrr(r)
    print(f"decoder: {args.decoder}  test pairs: {len(test)}")
    for k in sorted(set(args.k)):
        print(f"H@{k}: {hits[k]:.4f}")
    print(f"MRR: {score:.4f}")
    print(f"{args.decoder},{hits[1]:.6f},{hits[10]:.6f},{score:.6f},{seconds:.3f}")
    return 0


def cmd_synth(args):
    stages = _Stages()
    kg = stages("synth", generate_kg, args.entities, args.relations, args.triples, args.seed)
    pair = stages("synth", make_pair, kg, args.dropout, args.noise, args.dim, args.seed)
    paths = stages("write", write_dataset, args.out_dir, pair)
    print(f"wrote {len(paths)} files to {args.out_dir}")
    print(
        f"source: {pair.source.n_entities} entities, {pair.source.n_relations} relations, "
        f"{pair.source.n_triples} triples; target: {pair.target.n_triples} triples; "
        f"train {len(pair.alignment.train_pairs)} / test {len(pair.alignment.test_pairs)}"
    )
    return 0


def _load_seed_ids(path):
    ids = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            try:
                ids.append(int(line.split("\t")[0]))
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad entity id") from None
    return np.asarray(ids, dtype=np.int64)


def cmd_energy(args):
    stages = _Stages()
    x = stages("load", load_embeddings, args.features)
    kg = stages("load", load_triples, args.triples, n_entities=x.shape[0])
    a = undirected_adjacency(kg)
    before = stages("energy", dirichlet_energy, x, a)
    print(f"energy before: {before:.10g}")
    if args.iters > 0:
        seeds = stages("load", _load_seed_ids, args.seeds) if args.seeds else np.zeros(0, np.int64)
        if seeds.size and seeds.max() >= x.shape[0]:
            raise StageError("load", DataError("seed id beyond feature rows"))
        mask = SeedMask.from_indices(x.shape[0], seeds)
        x_after = stages("propagation", iterate_fp, sym_normalize(a), x, mask, args.iters)
        after = stages("energy", dirichlet_energy, x_after, a)
        print(f"energy after {args.iters} iterations: {after:.10g}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="tfp", description="Triple feature propagation for entity alignment.")
    parser.add_argument("--threads", type=int, default=None, help="kernel threads (default: all cores)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decode", help="reconstruct entity features for a KG pair")
    for flag in ("--src-triples", "--tgt-triples", "--train-pairs", "--src-emb", "--tgt-emb", "--out-src", "--out-tgt"):
        p.add_argument(flag, required=True)
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--dr", type=int, default=512, help="relation projection dimension")
    p.add_argument("--de", type=int, default=16, help="entity projection dimension")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--history", choices=sorted(HISTORY_CHOICES), default="concat")
    p.add_argument(
        "--seed-features",
        choices=("shared", "separate"),
        default="shared",
        help="give both entities of a train pair their mean feature (shared) or keep them as loaded",
    )
    p.add_argument("--dtype", choices=("float32", "float64"), default="float32")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval", help="score aligned features with H@k and MRR")
    p.add_argument("--src-features", required=True)
    p.add_argument("--tgt-features", required=True)
    p.add_argument("--test-pairs", required=True)
    p.add_argument("--decoder", choices=("greedy", "csls", "sinkhorn"), default="sinkhorn")
    p.add_argument("--k", type=_int_list, default=[1, 10])
    p.add_argument("--tau", type=float, default=0.05)
    p.add_argument("--sinkhorn-iters", type=int, default=10)
    p.add_argument("--csls-k", type=int, default=10)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="write a synthetic KG pair with known alignment")
    p.add_argument("--entities", type=int, required=True)
    p.add_argument("--relations", type=int, required=True)
    p.add_argument("--triples", type=int, required=True)
    p.add_argument("--dropout", type=float, default=0.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("energy", help="Dirichlet energy of features, optionally after propagation")
    p.add_argument("--triples", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--iters", type=int, default=0)
    p.add_argument("--seeds", help="file of seed entity ids (first tab field per line)")
    p.set_defaults(func=cmd_energy)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    _kernels.set_num_threads(args.threads)
    try:
        return args.func(args)
    except StageError as exc:
        print(f"tfp {args.command}: error in stage {exc.stage}: {exc.cause}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
