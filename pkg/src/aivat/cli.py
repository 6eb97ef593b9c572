"""Command-line interface.

    aivat simulate   sample a Kuhn, Leduc or hold'em corpus
    aivat train      fit a heuristic and commit to it (content hash + sidecar)
    aivat eval       estimate win rates with raw / MIVAT / AIVAT
    aivat pathology  fit a heuristic to the evaluation data itself
    aivat check      run the embedded verification suite

Exit codes: 0 success, 1 usage error, 2 validation error, 3 check failure.
Every flag can also come from ``--config FILE``, a flat ``key = value``
file using the long flag names; flags on the command line win.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from datetime import datetime, timezone
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .checks import CheckOptions, run_checks
from .corpus import FORMAT, file_hash, read_corpus, read_header, simulate_corpus, write_corpus
from .evaluation import (
    HEURISTICS,
    SCHEMES,
    SUMMARY_COLUMNS,
    WEIGHTINGS,
    GameData,
    HeuristicSpec,
    HoldemData,
    estimate_player,
    summarize,
    train_heuristic,
)
from .exceptions import AivatError, CommitmentError, InvalidArgumentError, ValidationError
from .heuristics import content_hash, dumps_record, heuristic_from_record
from .pathology import AdamConfig, ObjectiveKind, PathologyDataset, optimize, t_statistic
from .poker.features import INTERPRETATIONS
from .poker.history import read_hands, write_hands
from .poker.mivat import DEFAULT_TRACKED, TRACKABLE
from .poker.synth import generate_hands
from .stats import t_test_from_statistic

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_CHECK = 0, 1, 2, 3

REFERENCE_NOTES = (
    "Reference magnitudes from a 10,000-hand six-player no-limit evaluation, "
    "documentation only, never asserted:\n"
    "  variance attack: win rate 2062 mbb/h, SE 25 mbb/h\n"
    "  t-statistic attack: losing t = -95.050, winning t = 92.900 on the same hands\n"
    "  MIVAT with a GPR heuristic and IVW: estimated bias 3 mbb/h, SE 99 -> 75 mbb/h\n"
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _tracked(text: str):
    items = tuple(t for t in text.split(",") if t)
    bad = [t for t in items if t not in TRACKABLE]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown chance events {bad}; choose from {TRACKABLE}")
    return items


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key = value file supplying defaults for any flag")
    p.add_argument("--seed", type=int, default=0, help="seed for every random choice (default 0)")
    p.add_argument("--pretty", action="store_true", help="print aligned tables instead of CSV")
    p.add_argument("--explain", action="store_true", help="print notes on the method and reference numbers")


def _add_data(p: argparse.ArgumentParser):
    p.add_argument("--input", required=True, help="corpus file")
    p.add_argument("--scheme", choices=SCHEMES, default="mivat")
    p.add_argument("--player", type=int, default=None, help="evaluate one player/seat (default: all)")
    p.add_argument("--track", type=_tracked, default=DEFAULT_TRACKED,
                   help="hold'em chance events to correct, comma separated (default flop,turn,river)")
    p.add_argument("--interpretation", choices=INTERPRETATIONS, default="pot-hs-pow",
                   help="how pot, hand strength and player count combine in hold'em features")
    p.add_argument("--hs-samples", type=int, default=1000, help="Monte Carlo samples for pre-river hand strength")


def _add_heuristic(p: argparse.ArgumentParser, default="zero"):
    p.add_argument("--heuristic", choices=HEURISTICS, default=default)
    p.add_argument("--prior-scale", type=float, default=None, help="bayes-linear weight prior variance")
    p.add_argument("--noise-variance", type=float, default=None, help="bayes-linear observation noise")
    p.add_argument("--include-noise", action="store_true", help="add observation noise to heuristic covariances")
    p.add_argument("--ridge", type=float, default=0.0, help="wb-linear ridge term (extension, default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aivat", description="Variance-reduced agent evaluation for poker-like games.")
    parser.add_argument("--version", action="version", version=f"aivat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample a corpus")
    _add_common(p)
    p.add_argument("--game", choices=("kuhn", "leduc", "holdem"), required=True)
    p.add_argument("--hands", type=int, required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--profile", default="uniform", help="kuhn/leduc strategies: uniform or random:SEED")
    p.add_argument("--players", type=int, default=2, help="hold'em seats (2-6)")

    p = sub.add_parser("train", help="fit a heuristic and commit to it")
    _add_common(p)
    _add_data(p)
    _add_heuristic(p, default="bayes-linear")
    p.add_argument("--output", required=True, help="heuristic file; a .commit sidecar is written next to it")

    p = sub.add_parser("eval", help="estimate win rates")
    _add_common(p)
    _add_data(p)
    _add_heuristic(p)
    p.add_argument("--weighting", choices=WEIGHTINGS, default="uniform")
    p.add_argument("--kfold", type=int, default=None, help="train per fold and evaluate held-out hands")
    p.add_argument("--heuristic-file", default=None, help="committed heuristic from 'aivat train'")
    p.add_argument("--allow-insample", action="store_true",
                   help="permit a heuristic fitted on the evaluation corpus itself")
    p.add_argument("--variance-floor", type=float, default=1e-9,
                   help="lower bound on per-hand variance for ivw (squared mbb)")
    p.add_argument("--output", default=None, help="per-hand CSV (hand_id, player, b, estimate, variance)")
    p.add_argument("--summary", default=None, help="summary CSV path (default stdout)")

    p = sub.add_parser("pathology", help="fit a heuristic to the evaluation data")
    _add_common(p)
    _add_data(p)
    p.add_argument("--objective", choices=("variance", "tstat"), default="variance")
    p.add_argument("--iters", type=int, default=None, help="Adam iterations (default 250 variance, 10 tstat)")
    p.add_argument("--lr", type=float, default=100.0)
    p.add_argument("--beta1", type=float, default=0.9)
    p.add_argument("--beta2", type=float, default=0.999)
    p.add_argument("--weight-decay", type=float, default=0.0)
    p.add_argument("--mu0", type=float, default=0.0, help="null mean for the t-statistic (mbb)")
    p.add_argument("--output", default=None, help="per-iteration trace CSV")

    p = sub.add_parser("check", help="run the embedded verification suite")
    _add_common(p)
    p.add_argument("--only", default=None, help="comma-separated check names")
    p.add_argument("--corrupt-coefficient", action="store_true",
                   help="testing hook: perturb one coefficient so the group-sum check must fail")
    return parser


# ---------------------------------------------------------------------------
# config files


def read_config(path: str) -> Dict[str, str]:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.split("#", 1)[0].strip()
            if not s:
                continue
            if "=" not in s:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (x.strip() for x in s.split("=", 1))
            values[key.lstrip("-")] = value
    return values


def _truthy(text: str) -> bool:
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


def _apply_config(subparser: argparse.ArgumentParser, values: Dict[str, str]):
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, raw in values.items():
        dest = key.replace("-", "_")
        action = actions.get(dest)
        if action is None or dest in ("config", "help"):
            raise UsageError(f"unknown config key {key!r}")
        if isinstance(action, argparse._StoreTrueAction):
            value = _truthy(raw)
        else:
            try:
                value = action.type(raw) if action.type else raw
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"config key {key!r}: {exc}") from None
            if action.choices is not None and value not in action.choices:
                raise UsageError(f"config key {key!r}: {value!r} not in {list(action.choices)}")
        defaults[dest] = value
        action.required = False
    subparser.set_defaults(**defaults)


def _config_path(argv: Sequence[str]) -> Optional[str]:
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if a.startswith("--config="):
            return a.split("=", 1)[1]
    return None


def parse_args(argv: Sequence[str]):
    parser = build_parser()
    path = _config_path(argv)
    command = next((a for a in argv if a in COMMANDS), None)
    if path and command:
        subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        _apply_config(subparsers.choices[command], read_config(path))
    return parser.parse_args(argv)


# ---------------------------------------------------------------------------
# output helpers


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return "nan" if math.isnan(x) else f"{x:.10g}"
    return str(x)


def to_csv(columns: Sequence[str], rows: List[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def to_table(columns: Sequence[str], rows: List[dict]) -> str:
    cells = [list(columns)] + [[fmt(r.get(c)) for c in columns] for r in rows]
    widths = [max(len(row[j]) for row in cells) for j in range(len(columns))]
    lines = ["  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def emit(columns, rows, args, path: Optional[str] = None):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(to_csv(columns, rows))
        return
    sys.stdout.write(to_table(columns, rows) if args.pretty else to_csv(columns, rows))


def note(args, text: str):
    if args.explain:
        sys.stderr.write(text if text.endswith("\n") else text + "\n")


# ---------------------------------------------------------------------------
# data loading


def load_data(args):
    header = read_header(args.input)
    if header.get("game") == "holdem":
        hands = read_hands(args.input)
        return HoldemData(hands, args.track, args.interpretation, args.hs_samples, args.seed), header
    return GameData(read_corpus(args.input)), header


def _players(args, data) -> List[int]:
    if args.player is None:
        return data.players
    if args.player not in data.players:
        raise UsageError(f"player {args.player} not in {data.players}")
    return [args.player]


def _spec(args) -> HeuristicSpec:
    return HeuristicSpec(args.heuristic, args.prior_scale, args.noise_variance, args.include_noise, args.ridge)


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(args) -> int:
    if args.hands < 0:
        raise UsageError("--hands must be non-negative")
    if args.game == "holdem":
        hands = generate_hands(args.hands, args.seed, args.players)
        header = {"format": FORMAT, "game": "holdem", "hands": args.hands, "seed": args.seed,
                  "players": args.players}
        write_hands(args.output, hands, header)
    else:
        write_corpus(args.output, simulate_corpus(args.game, args.hands, args.seed, args.profile))
    note(args, f"wrote {args.hands} {args.game} hands to {args.output}")
    return EXIT_OK


def cmd_train(args) -> int:
    if args.scheme == "raw":
        raise UsageError("the raw scheme uses no heuristic")
    data, header = load_data(args)
    player = 0 if args.player is None else args.player
    _players(argparse.Namespace(player=player), data)
    heuristic = train_heuristic(data, _spec(args), player, args.scheme, range(len(data)))
    corpus_hash = file_hash(args.input)
    record = {
        "format": "aivat-heuristic",
        "game": header.get("game"),
        "player": player,
        "scheme": args.scheme,
        "corpus_hash": corpus_hash,
        "heuristic": heuristic.to_record(),
    }
    text = dumps_record(record) + "\n"
    with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    digest = content_hash(text)
    commit = {
        "heuristic_hash": digest,
        "corpus_hash": corpus_hash,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    with open(args.output + ".commit", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(commit, sort_keys=True, indent=1) + "\n")
    print(f"committed {args.heuristic} heuristic sha256={digest}")
    note(args, "Evaluate only on hands the heuristic has not seen; 'aivat eval' refuses its training corpus.")
    return EXIT_OK


INSAMPLE_MESSAGE = (
    "refusing to evaluate: the heuristic was fitted on this evaluation corpus. A heuristic must be "
    "fixed before the evaluation data is observed, otherwise it can be tuned to make the estimate say "
    "anything. Use --kfold, a heuristic trained on other hands, or --allow-insample to override."
)


def load_committed(args, data, header):
    with open(args.heuristic_file, encoding="utf-8") as fh:
        text = fh.read()
    try:
        with open(args.heuristic_file + ".commit", encoding="utf-8") as fh:
            commit = json.load(fh)
    except FileNotFoundError:
        raise CommitmentError(f"{args.heuristic_file} has no .commit sidecar; train it with 'aivat train'") from None
    if commit.get("heuristic_hash") != content_hash(text):
        raise CommitmentError(f"{args.heuristic_file} changed after it was committed")
    if commit.get("corpus_hash") == file_hash(args.input) and not args.allow_insample:
        raise CommitmentError(INSAMPLE_MESSAGE)
    record = json.loads(text)
    if record.get("game") != header.get("game"):
        raise ValidationError(f"heuristic was trained on {record.get('game')!r}, corpus is {header.get('game')!r}")
    if record.get("scheme") != args.scheme:
        raise UsageError(f"heuristic was trained for scheme {record.get('scheme')!r}")
    player = record["player"]
    if args.player is not None and args.player != player:
        raise UsageError(f"heuristic was trained for player {player}")
    is_game = isinstance(data, GameData)
    features = data.feature_map(player) if record["heuristic"]["kind"] != "tabular" else None
    heuristic = heuristic_from_record(record["heuristic"], features, game_histories=is_game)
    return player, heuristic, record["heuristic"]["kind"]


def cmd_eval(args) -> int:
    data, header = load_data(args)
    if args.kfold is not None and args.heuristic_file:
        raise UsageError("--kfold trains its own heuristics; drop --heuristic-file")
    rows, per_hand = [], []
    if args.heuristic_file:
        if args.scheme == "raw":
            raise UsageError("the raw scheme uses no heuristic")
        player, heuristic, kind = load_committed(args, data, header)
        results = [(estimate_player(data, player, args.scheme, heuristic=heuristic), kind)]
    else:
        trained = args.scheme != "raw" and args.heuristic != "zero"
        if trained and args.kfold is None and not args.allow_insample:
            raise CommitmentError(INSAMPLE_MESSAGE)
        kind = args.heuristic if args.scheme != "raw" else "none"
        results = [(estimate_player(data, p, args.scheme, spec=_spec(args), kfold=args.kfold, seed=args.seed), kind)
                   for p in _players(args, data)]
    for est, kind in results:
        rows.extend(summarize(est, args.scheme, kind, args.weighting, args.variance_floor))
        for i, hid in enumerate(est.ids):
            per_hand.append({"hand_id": hid, "player": est.player, "b": est.b[i], "estimate": est.values[i],
                             "variance": None if est.variances is None else est.variances[i]})
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(to_csv(("hand_id", "player", "b", "estimate", "variance"), per_hand))
    emit(SUMMARY_COLUMNS, rows, args, args.summary)
    note(args, "se_mbb is the empirical (weighted) standard error; se_model_mbb comes from the heuristic's "
               "predictive variance; est_bias_mbb estimates the bias inverse-variance weighting introduces.")
    note(args, REFERENCE_NOTES)
    return EXIT_OK


TRACE_COLUMNS = ("player", "direction", "iteration", "objective", "t", "p")
REPORT_COLUMNS = ("player", "objective", "iterations", "initial", "final", "ratio", "win_rate_mbb",
                  "se_mbb", "t", "p_or_log10p")


def _run_attack(data_set: PathologyDataset, player: int, kind: ObjectiveKind, adam: AdamConfig, mu0: float,
                trace_rows: List[dict]):
    T = data_set.n_trials

    def record(k, theta, value):
        t, _ = t_statistic(theta, data_set, mu0)
        test = t_test_from_statistic(t, T - 1, "less" if kind is ObjectiveKind.TSTAT_MIN else "greater")
        trace_rows.append({"player": player, "direction": kind.value, "iteration": k, "objective": value,
                           "t": t, "p": test.p_text()})

    return optimize(kind, data_set, adam, mu0=mu0, callback=record)


def cmd_pathology(args) -> int:
    if args.scheme == "raw":
        raise UsageError("the raw scheme has no heuristic to attack")
    data, _ = load_data(args)
    iters = args.iters if args.iters is not None else (250 if args.objective == "variance" else 10)
    adam = AdamConfig(args.lr, args.beta1, args.beta2, args.weight_decay, 1e-8, iters)
    trace_rows, report = [], []
    for player in _players(args, data):
        ds = PathologyDataset.from_estimates(data.decompose(player, args.scheme))
        kinds = [ObjectiveKind.SAMPLE_VARIANCE] if args.objective == "variance" else [
            ObjectiveKind.TSTAT_MIN, ObjectiveKind.TSTAT_MAX]
        for kind in kinds:
            result = _run_attack(ds, player, kind, adam, args.mu0, trace_rows)
            v = ds.estimates(result.theta)
            t, _ = t_statistic(result.theta, ds, args.mu0)
            test = t_test_from_statistic(t, ds.n_trials - 1, "less" if kind is ObjectiveKind.TSTAT_MIN else "greater")
            initial, final = result.trace[0], result.trace[-1]
            report.append({
                "player": player, "objective": kind.value, "iterations": iters,
                "initial": initial, "final": final,
                "ratio": final / initial if kind is ObjectiveKind.SAMPLE_VARIANCE and initial else None,
                "win_rate_mbb": float(np.mean(v)), "se_mbb": float(np.std(v, ddof=1) / math.sqrt(v.size)),
                "t": t, "p_or_log10p": test.p_text(),
            })
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(to_csv(TRACE_COLUMNS, trace_rows))
    emit(REPORT_COLUMNS, report, args)
    note(args, "Every fixed heuristic keeps the estimator unbiased; these numbers come from choosing the "
               "heuristic after seeing the data, which voids that guarantee.")
    note(args, REFERENCE_NOTES)
    return EXIT_OK


def cmd_check(args) -> int:
    only = [s for s in args.only.split(",") if s] if args.only else None
    results = run_checks(CheckOptions(args.corrupt_coefficient, args.seed), only)
    if only and len(results) != len(only):
        raise UsageError(f"unknown check in {only}")
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"failed checks: {', '.join(failed)}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "train": cmd_train, "eval": cmd_eval,
            "pathology": cmd_pathology, "check": cmd_check}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        return COMMANDS[args.command](args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except (UsageError, InvalidArgumentError) as exc:
        print(f"aivat: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AivatError, OSError) as exc:
        print(f"aivat: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
