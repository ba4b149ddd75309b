"""Command-line entry point: prep, embed, train, evaluate, explain.

Configuration is a flat ``key=value`` file (or a shipped preset) with
``--set key=value`` overrides. Recognized keys, with the conventional
symbol in parentheses:

  h             embedding size (h)
  d             preference-mode count (d)
  kappa         key/query size (kappa)
  alpha         confidence weight on observed entries (alpha)
  lambda        decoder regularization (lambda)
  rho           corruption rate (rho)
  epochs        training epochs (epsilon)
  gamma         randomized-SVD power iterations (gamma)
  oversample    randomized-SVD oversampling columns
  scale         embedding scaling, none | sqrt-sigma
  seed          RNG seed
  learning_rate optimizer step size
  batch_size    users per optimizer step
  optimizer     adam | sgd
  rank          PureSVD rank (PureSVD presets only)
  algorithm     ama | pop | puresvd (presets only)

The default data directory comes from $AMAREC_DATA_DIR when --data is
omitted.
"""

from __future__ import annotations

import argparse
import importlib.resources
import os
import sys


from amarec import baselines, dataset, evaluation, explain as explain_mod, linalg, training
from amarec.model import AmaConfig, load_model, save_model
from amarec.training import TrainConfig


class CliError(Exception):
    pass


_FLOAT_KEYS = {"alpha", "lambda", "rho", "learning_rate"}
_INT_KEYS = {"h", "d", "kappa", "epochs", "gamma", "oversample", "seed",
             "batch_size", "rank"}
_STR_KEYS = {"scale", "optimizer", "algorithm"}


def parse_config_text(text, source="<config>"):
    cfg = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{source}:{lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        cfg[key] = _coerce(key, value, f"{source}:{lineno}")
    return cfg


def _coerce(key, value, where):
    try:
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _INT_KEYS:
            return int(float(value))
        if key in _STR_KEYS:
            return value
    except ValueError:
        raise CliError(f"{where}: bad value {value!r} for {key}") from None
    raise CliError(f"{where}: unknown config key {key!r}")


def load_preset(name):
    ref = importlib.resources.files("amarec").joinpath(f"presets/{name}.conf")
    if not ref.is_file():
        available = sorted(
            p.name[:-5]
            for p in importlib.resources.files("amarec").joinpath("presets").iterdir()
            if p.name.endswith(".conf")
        )
        raise CliError(f"unknown preset {name!r}; available: {', '.join(available)}")
    return parse_config_text(ref.read_text(encoding="utf-8"), source=f"preset {name}")


def _gather_config(args):
    cfg = {}
    if getattr(args, "preset", None):
        cfg.update(load_preset(args.preset))
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg.update(parse_config_text(fh.read(), source=args.config))
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise CliError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        cfg[key.strip()] = _coerce(key.strip(), value.strip(), "--set")
    return cfg


def _ama_config(cfg):
    return AmaConfig(
        h=cfg.get("h", 40), d=cfg.get("d", 3), kappa=cfg.get("kappa", 3),
        alpha=cfg.get("alpha", 1.0), lam=cfg.get("lambda", 1e-5),
        rho=cfg.get("rho", 0.3), epochs=cfg.get("epochs", 300),
        seed=cfg.get("seed", 0),
    )


def _data_dir(args):
    if args.data:
        return args.data
    env = os.environ.get("AMAREC_DATA_DIR")
    if env:
        return env
    raise CliError("no data directory: pass --data or set AMAREC_DATA_DIR")


def cmd_prep(args):
    events = dataset.parse_ratings(args.input, args.format,
                                   amazon_columns=args.amazon_columns)
    events = dataset.binarize(events, args.threshold)
    if not events:
        raise CliError("empty dataset: no ratings exceed the threshold")
    fractions = tuple(float(f) for f in args.fractions.split(","))
    data = dataset.temporal_split(events, fractions)
    dataset.save_split(data, args.out, threshold=args.threshold, fractions=fractions)
    m, n = data.shape
    print(f"wrote splits to {args.out}: {m} users x {n} items, "
          f"{data.train.nnz}/{data.validation.nnz}/{data.test.nnz} interactions")


def _build_embeddings(data, cfg):
    svd = linalg.randomized_svd(
        data.train, rank=cfg.get("h", 40), power_iters=cfg.get("gamma", 10),
        oversample=cfg.get("oversample", 10), seed=cfg.get("seed", 0),
    )
    return linalg.item_embeddings(svd, scale=cfg.get("scale", "none")), svd


def cmd_embed(args):
    data = dataset.load_split(_data_dir(args))
    cfg = _gather_config(args)
    V, svd = _build_embeddings(data, cfg)
    linalg.save_embeddings(V, args.out, meta={
        "h": cfg.get("h", 40), "gamma": cfg.get("gamma", 10),
        "seed": cfg.get("seed", 0), "scale": cfg.get("scale", "none"),
        "source_hash": linalg.matrix_hash(data.train),
    })
    print(f"wrote {V.shape[0]}x{V.shape[1]} item embeddings to {args.out}")


def cmd_train(args):
    data = dataset.load_split(_data_dir(args))
    cfg = _gather_config(args)
    mcfg = _ama_config(cfg)
    V, _ = _build_embeddings(data, {**cfg, "h": mcfg.h})
    tcfg = TrainConfig(
        model=mcfg,
        learning_rate=cfg.get("learning_rate", 1e-3),
        batch_size=cfg.get("batch_size", 512),
        optimizer=cfg.get("optimizer", "adam"),
        checkpoint_every=args.checkpoint_every,
        checkpoint_path=args.out,
    )
    params, log = training.train(data, V, tcfg)
    save_model(params, mcfg, args.out, item_index_hash=linalg.matrix_hash(data.train))
    if args.log_prefix:
        log.save_csv(args.log_prefix + ".csv")
        log.save_json(args.log_prefix + ".json")
    last = log.records[-1][1] if log.records else float("nan")
    print(f"trained {mcfg.epochs} epochs; final mean objective {last:.6g}; "
          f"model written to {args.out}")


def _scorer_for(args, data, cfg):
    if args.model:
        params, mcfg = load_model(args.model)
        V, _ = _build_embeddings(data, {**cfg, "h": mcfg.h, "seed": mcfg.seed})
        return baselines.ama_scorer(params, V, mcfg)
    if args.baseline == "pop":
        return baselines.pop_scorer(data.train)
    if args.baseline == "puresvd":
        return baselines.puresvd_scorer(
            data.train, rank=cfg.get("rank", 50), iters=cfg.get("gamma", 10),
            seed=cfg.get("seed", 0),
        )
    raise CliError("pass --model or --baseline {pop,puresvd}")


def cmd_evaluate(args):
    data = dataset.load_split(_data_dir(args))
    cfg = _gather_config(args)
    scorer = _scorer_for(args, data, cfg)
    ks = tuple(int(k) for k in args.ks.split(","))
    report = evaluation.evaluate(scorer, data, split=args.split, ks=ks,
                                 threads=args.threads)
    print(report.table())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
        print(f"report written to {args.out}")


def cmd_explain(args):
    data = dataset.load_split(_data_dir(args))
    params, mcfg = load_model(args.model)
    cfg = _gather_config(args)
    V, _ = _build_embeddings(data, {**cfg, "h": mcfg.h, "seed": mcfg.seed})
    item_ids = list(data.item_ids)
    did_something = False
    if args.user is not None:
        u = data.user_index.get(args.user)
        if u is None:
            raise CliError(f"unknown user id {args.user!r}")
        train = data.train
        obs = train.indices[train.indptr[u]:train.indptr[u + 1]]
        if obs.size == 0:
            raise CliError(f"user {args.user!r} has an empty interaction history")
        exp = explain_mod.explain_user(params, V, mcfg, obs, u, k=args.k)
        out = args.out or f"user_{args.user}.json"
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(exp.to_json(item_ids=item_ids))
        if args.dot:
            with open(args.dot, "w", encoding="utf-8") as fh:
                fh.write(explain_mod.user_explanation_dot(exp, item_ids=item_ids))
        print(f"user explanation written to {out}")
        did_something = True
    if args.histogram:
        hist = explain_mod.mode_usage(params, V, mcfg, data, k=args.k)
        out = args.out or "mode_usage.csv"
        explain_mod.save_histogram_csv(hist, out)
        print(f"mode-usage histogram written to {out}")
        did_something = True
    if args.modes:
        top = explain_mod.mode_top_items(params, V, mcfg, data, n_top=args.n)
        out = args.out or "mode_top_items.csv"
        explain_mod.save_mode_top_items_csv(top, out, item_ids=item_ids)
        print(f"per-mode top items written to {out}")
        did_something = True
    if not did_something:
        raise CliError("pass one of --user, --histogram, --modes")


def build_parser():
    p = argparse.ArgumentParser(
        prog="amarec",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common_cfg(sp):
        sp.add_argument("--preset", help="shipped preset name, e.g. ml1m-ama")
        sp.add_argument("--config", help="key=value config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a single config key")
        sp.add_argument("--data", help="split directory (default $AMAREC_DATA_DIR)")
        sp.add_argument("--threads", type=int, default=1,
                        help="worker cap; results are thread-count invariant")

    sp = sub.add_parser("prep", help="parse, binarize and split a rating file")
    sp.add_argument("--input", required=True)
    sp.add_argument("--format", required=True, choices=["movielens-dat", "amazon-csv"])
    sp.add_argument("--threshold", type=float, default=3.0,
                    help="keep ratings strictly above this value")
    sp.add_argument("--fractions", default="0.5,0.2,0.3")
    sp.add_argument("--amazon-columns", default="item,user,rating,timestamp")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_prep)

    sp = sub.add_parser("embed", help="compute item embeddings from the train split")
    common_cfg(sp)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_embed)

    sp = sub.add_parser("train", help="embed and train a model")
    common_cfg(sp)
    sp.add_argument("--out", required=True, help="model output path")
    sp.add_argument("--log-prefix", help="write the train log as PREFIX.csv/.json")
    sp.add_argument("--checkpoint-every", type=int, default=0)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("evaluate", help="rank and score a model or baseline")
    common_cfg(sp)
    sp.add_argument("--model", help="trained model file")
    sp.add_argument("--baseline", choices=["pop", "puresvd"])
    sp.add_argument("--split", default="test", choices=["validation", "test"])
    sp.add_argument("--ks", default="5,10,20")
    sp.add_argument("--out", help="JSON report path")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("explain", help="attention-based explanation reports")
    common_cfg(sp)
    sp.add_argument("--model", required=True)
    sp.add_argument("--user", help="external user id for a per-user report")
    sp.add_argument("--histogram", action="store_true",
                    help="mode-usage histogram over users")
    sp.add_argument("--modes", action="store_true",
                    help="top attended items per mode")
    sp.add_argument("--k", type=int, default=10, help="recommendations per user")
    sp.add_argument("--n", type=int, default=10, help="items per mode listing")
    sp.add_argument("--out", help="output path")
    sp.add_argument("--dot", help="also write a DOT graph (per-user report only)")
    sp.set_defaults(func=cmd_explain)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (CliError, dataset.ConfigError, dataset.ParseError, ValueError,
            KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
