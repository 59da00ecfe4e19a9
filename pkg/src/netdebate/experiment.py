"""Experiment orchestration: config, datasets, runs, analysis and plot exports.

A run directory is self-contained::

    manifest.json            config, resolved seeds, versions, file index
    questions.json           the questions actually administered
    networks/<label>.edges   edge lists
    transcripts/<label>/q<id>_r<rep>.json
    reports/                 written by analyze() and export_plot_data()
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import platform
import random
import re
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Sequence

import httpx
import yaml

from . import __version__
from .agents import (
    AgentBackend,
    ChatClient,
    InfluenceParams,
    LLMBackend,
    Question,
    ScriptedBackend,
    StochasticBackend,
)
from .agents.core import OPTION_LETTERS
from .engine import BIAS_MODES, BIAS_PLACEMENTS, DebateConfig, Transcript, assign_bias, check_transcript, run_debate
from .errors import ConfigError, IncompleteData, InvalidParameter, NetDebateError, ParseError
from .metrics import (
    accuracy_by_round,
    consensus_split,
    final_round_correct_fraction,
    influence_table,
    token_cost_per_round,
    transition_counts,
)
from .seeding import derive_seed
from .topology import GeneratorParams, Network, generate, parse_network, serialize_network

log = logging.getLogger(__name__)

MANIFEST = "manifest.json"
QUESTIONS = "questions.json"
FIGURES = ("accuracy_by_round", "influence", "transitions", "simpson_distribution", "correct_fraction")
MAX_CORRUPT_FRACTION = 0.05
BACKEND_KINDS = ("llm", "stochastic", "scripted")


class AnalysisError(NetDebateError):
    pass


# --- configuration --------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    networks: list[dict]
    dataset: str
    output_dir: str
    backend: dict = field(default_factory=lambda: {"kind": "stochastic"})
    bias: dict | None = None
    question_limit: int = 100
    repetitions: int = 3
    rounds: int = 4
    token_cap: int = 200
    seed: int = 0
    parallelism: int = 8
    influence_bins: int = 5

    def __post_init__(self):
        for name in ("question_limit", "repetitions", "rounds", "token_cap", "parallelism", "influence_bins"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if not self.networks:
            raise ConfigError("at least one network is required")
        kind = self.backend.get("kind")
        if kind not in BACKEND_KINDS:
            raise ConfigError(f"backend.kind must be one of {BACKEND_KINDS}, got {kind!r}")
        if self.bias is not None:
            missing = {"placement", "mode", "k"} - set(self.bias)
            if missing:
                raise ConfigError(f"bias is missing {sorted(missing)}")
            if self.bias["placement"] not in BIAS_PLACEMENTS or self.bias["mode"] not in BIAS_MODES:
                raise ConfigError(f"bad bias settings {self.bias}")
            if int(self.bias["k"]) < 0:
                raise ConfigError("bias.k must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        for required in ("networks", "dataset", "output_dir"):
            if required not in data:
                raise ConfigError(f"config needs '{required}'")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def debate_config(self, workers: int = 1) -> DebateConfig:
        return DebateConfig(self.rounds, self.token_cap, self.repetitions, self.seed, workers)


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a YAML (or JSON) config; relative paths resolve against its folder."""
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    base = path.resolve().parent

    def resolve(p: str) -> str:
        return str(p) if Path(p).is_absolute() else str((base / p).resolve())

    if isinstance(data, dict):
        for key in ("dataset", "output_dir"):
            if key in data:
                data[key] = resolve(data[key])
        for net in data.get("networks") or []:
            if isinstance(net, dict) and "path" in net:
                net["path"] = resolve(net["path"])
        backend = data.get("backend")
        if isinstance(backend, dict) and "path" in backend:
            backend["path"] = resolve(backend["path"])
    return ExperimentConfig.from_dict(data)


def build_backend(settings: dict, token_cap: int = 200) -> AgentBackend:
    settings = dict(settings)
    kind = settings.pop("kind", None)
    try:
        if kind == "stochastic":
            params = InfluenceParams(**settings.pop("params", {}))
            return StochasticBackend(params, **settings)
        if kind == "scripted":
            return ScriptedBackend.from_file(settings["path"])
        if kind == "llm":
            client = ChatClient(
                settings.pop("base_url", ""),
                settings.pop("model", ""),
                max_tokens=token_cap,
                **settings,
            )
            return LLMBackend(client)
    except (TypeError, KeyError, InvalidParameter) as exc:
        raise ConfigError(f"bad {kind} backend settings: {exc}") from None
    raise ConfigError(f"unknown backend kind {kind!r}")


def resolve_networks(cfg: ExperimentConfig) -> list[tuple[Network, dict]]:
    """Build every configured network; returns (network, provenance) pairs."""
    out = []
    labels = set()
    for index, entry in enumerate(cfg.networks):
        entry = dict(entry)
        if "path" in entry:
            try:
                text = Path(entry["path"]).read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read network file: {exc}") from None
            label = entry.get("label") or Path(entry["path"]).stem
            net = parse_network(text, label=label)
            provenance = {"path": entry["path"]}
        else:
            label = entry.get("label") or f"{entry.get('kind')}_{index + 1}"
            entry["label"] = label
            entry.setdefault("seed", derive_seed(cfg.seed, "network", label))
            try:
                params = GeneratorParams.from_dict(entry)
            except (TypeError, InvalidParameter) as exc:
                raise ConfigError(f"network {label}: {exc}") from None
            net = generate(params)
            provenance = {"generator": params.to_dict()}
        if label in labels:
            raise ConfigError(f"duplicate network label {label!r}")
        if re.search(r"[\\/]", label):
            raise ConfigError(f"network label {label!r} may not contain path separators")
        labels.add(label)
        out.append((net, provenance))
    return out


# --- datasets -------------------------------------------------------------------------


def load_dataset(path: str | Path, limit: int | None = None) -> list[Question]:
    """Read a 6-column CSV (stem, A, B, C, D, answer), headerless or with a header row.

    Question ids are the 0-based data-row index. Errors name the 1-based file row.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read dataset {path}: {exc}") from None
    questions: list[Question] = []
    reader = csv.reader(io.StringIO(text))
    for rownum, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if rownum == 1 and row[-1].strip().lower() == "answer":
            continue
        if len(row) != 6:
            raise ParseError(f"expected 6 columns (stem, A, B, C, D, answer), got {len(row)}", rownum)
        answer = row[5].strip().upper()
        if answer not in OPTION_LETTERS:
            raise ParseError(f"answer must be one of A-D, got {row[5]!r}", rownum)
        qid = str(len(questions))
        questions.append(Question(qid, row[0], dict(zip(OPTION_LETTERS, row[1:5])), answer))
        if limit is not None and len(questions) >= limit:
            break
    if not questions:
        raise ParseError(f"dataset {path} has no questions")
    return questions


def write_dataset(path: str | Path, questions: Iterable[Question]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for q in questions:
            writer.writerow([q.stem, *(q.options[k] for k in OPTION_LETTERS), q.correct.value])


def synthetic_questions(n: int, seed: int = 0) -> list[Question]:
    """Placeholder questions with seeded answer keys, for offline backends."""
    rng = random.Random(seed)
    return [
        Question(
            str(i),
            f"Synthetic question {i}",
            {k: f"option {k} of question {i}" for k in OPTION_LETTERS},
            rng.choice(OPTION_LETTERS),
        )
        for i in range(n)
    ]


def _question_to_dict(q: Question) -> dict:
    return {"id": q.id, "stem": q.stem, "options": dict(q.options), "correct": q.correct.value}


def _question_from_dict(d: dict) -> Question:
    return Question(d["id"], d["stem"], d["options"], d["correct"])


# --- running --------------------------------------------------------------------------


def debate_seed(master: int, label: str, question_id: str, repetition: int) -> int:
    return derive_seed(master, label, question_id, repetition)


def placement_seed(master: int, label: str) -> int:
    return derive_seed(master, label, "placement")


def run_condition(
    networks: Sequence[Network],
    questions: Sequence[Question],
    backend: AgentBackend,
    cfg: DebateConfig,
    bias: dict | None = None,
) -> list[Transcript]:
    """Run every (network, question, repetition) in memory."""
    out = []
    for net in networks:
        for q in questions:
            for rep in range(cfg.repetitions):
                out.append(_one_debate(net, q, rep, backend, cfg, bias))
    return out


def _one_debate(net: Network, q: Question, rep: int, backend: AgentBackend, cfg: DebateConfig, bias: dict | None) -> Transcript:
    bias_specs = []
    if bias:
        bias_specs = assign_bias(
            net,
            bias["placement"],
            bias["mode"],
            int(bias["k"]),
            q,
            debate_seed(cfg.seed, net.label, q.id, rep),
            placement_seed=placement_seed(cfg.seed, net.label),
            backend=None if backend.offline else backend,
        )
    return run_debate(net, backend, q, cfg, bias_specs, rep)


def _transcript_relpath(label: str, qid: str, rep: int) -> str:
    safe = re.sub(r"[^A-Za-z0-9_.-]", "_", qid)
    return f"transcripts/{label}/q{safe}_r{rep}.json"


def _dump_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=False, ensure_ascii=False) + "\n", encoding="utf-8")


def _versions() -> dict:
    return {"netdebate": __version__, "python": platform.python_version(), "httpx": httpx.__version__, "pyyaml": yaml.__version__}


def run_experiment(cfg: ExperimentConfig, *, resume: bool = False, analyze_after: bool = True) -> Path:
    """Execute every debate and write transcripts, manifest and reports.

    Validates backend, networks and dataset before any debate starts. With
    ``resume`` existing transcript files are kept and skipped. The manifest is
    rewritten even when the run aborts, so partial results stay usable.
    """
    backend = build_backend(cfg.backend, cfg.token_cap)
    backend.check()
    networks = resolve_networks(cfg)
    questions = load_dataset(cfg.dataset, cfg.question_limit)
    dataset_hash = hashlib.sha256(Path(cfg.dataset).read_bytes()).hexdigest()

    run_dir = Path(cfg.output_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    if (run_dir / MANIFEST).exists() and not resume:
        raise ConfigError(f"{run_dir} already holds a run; pass resume to continue it")
    (run_dir / "networks").mkdir(exist_ok=True)
    _dump_json(run_dir / QUESTIONS, [_question_to_dict(q) for q in questions])

    manifest = {
        "format": 1,
        "status": "running",
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "versions": _versions(),
        "dataset": {"path": cfg.dataset, "sha256": dataset_hash, "n_questions": len(questions), "file": QUESTIONS},
        "networks": [],
        "transcripts": [],
        "failures": [],
        "reports": [],
    }
    for net, provenance in networks:
        rel = f"networks/{net.label}.edges"
        (run_dir / rel).write_text(serialize_network(net))
        manifest["networks"].append(
            {"label": net.label, "file": rel, "n": net.n, "edges": net.n_edges,
             "placement_seed": placement_seed(cfg.seed, net.label), **provenance}
        )

    workers = 1 if backend.offline else cfg.parallelism
    dcfg = cfg.debate_config(workers)
    try:
        for net, _ in networks:
            (run_dir / "transcripts" / net.label).mkdir(parents=True, exist_ok=True)
            for q in questions:
                for rep in range(cfg.repetitions):
                    rel = _transcript_relpath(net.label, q.id, rep)
                    target = run_dir / rel
                    if resume and target.exists():
                        t = Transcript.from_json(target.read_text(encoding="utf-8"))
                    else:
                        t = _one_debate(net, q, rep, backend, dcfg, cfg.bias)
                        tmp = target.with_suffix(".tmp")
                        tmp.write_text(t.to_json(), encoding="utf-8")
                        tmp.replace(target)
                    entry = {"file": rel, "network_label": net.label, "question_id": q.id, "repetition": rep,
                             "debate_seed": debate_seed(cfg.seed, net.label, q.id, rep)}
                    manifest["transcripts"].append(entry)
                    if t.failures():
                        manifest["failures"].append({"file": rel, "failed_responses": t.failures()})
        manifest["status"] = "complete"
    finally:
        if manifest["status"] != "complete":
            manifest["status"] = "incomplete"
        _dump_json(run_dir / MANIFEST, manifest)

    if analyze_after:
        analyze(run_dir)
    return run_dir


# --- analysis -------------------------------------------------------------------------


def read_manifest(run_dir: str | Path) -> dict:
    path = Path(run_dir) / MANIFEST
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"{run_dir} has no {MANIFEST}") from None


def load_run(run_dir: str | Path) -> tuple[dict, dict[str, Network], list[Question], list[Transcript], list[dict]]:
    """Load manifest-listed inputs. Corrupt transcripts are returned separately."""
    run_dir = Path(run_dir)
    manifest = read_manifest(run_dir)
    networks = {}
    for entry in manifest["networks"]:
        networks[entry["label"]] = parse_network((run_dir / entry["file"]).read_text(), label=entry["label"])
    questions = [_question_from_dict(d) for d in json.loads((run_dir / manifest["dataset"]["file"]).read_text())]
    rounds = manifest["config"]["rounds"]
    transcripts, corrupt = [], []
    for entry in manifest["transcripts"]:
        try:
            t = Transcript.from_json((run_dir / entry["file"]).read_text(encoding="utf-8"))
            problems = check_transcript(t, rounds)
            net = networks.get(t.network_label)
            if net is None or net.n != t.n_agents:
                problems.append("network label or size does not match the manifest")
            if (t.network_label, t.question_id, t.repetition) != (entry["network_label"], entry["question_id"], entry["repetition"]):
                problems.append("transcript identity does not match its manifest entry")
        except (OSError, ValueError, KeyError, TypeError, NetDebateError) as exc:
            problems = [f"{type(exc).__name__}: {exc}"]
        if problems:
            log.warning("excluding corrupt transcript %s: %s", entry["file"], "; ".join(problems))
            corrupt.append({"file": entry["file"], "problems": problems})
        else:
            transcripts.append(t)
    return manifest, networks, questions, transcripts, corrupt


def _write_csv(path: Path, header: list[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def analyze(run_dir: str | Path) -> dict:
    """Compute every report for a run and write JSON + CSV under ``reports/``."""
    run_dir = Path(run_dir)
    manifest, networks, questions, transcripts, corrupt = load_run(run_dir)
    total = len(manifest["transcripts"])
    if total and len(corrupt) / total > MAX_CORRUPT_FRACTION:
        raise AnalysisError(f"{len(corrupt)} of {total} transcripts are corrupt; refusing to analyze")
    cfg = manifest["config"]
    reps = cfg["repetitions"]
    bins = cfg.get("influence_bins", 5)

    # accuracy needs full coverage: drop questions touched by a corrupt transcript
    present = {(t.network_label, t.question_id, t.repetition) for t in transcripts}
    complete_qs = [
        q for q in questions
        if all((label, q.id, rep) in present for label in networks for rep in range(reps))
    ]
    dropped = [q.id for q in questions if q not in complete_qs]
    acc_ts = [t for t in transcripts if t.question_id not in set(dropped)]
    if not complete_qs:
        raise IncompleteData(["no question has a complete set of transcripts"])

    accuracy = accuracy_by_round(acc_ts, complete_qs, reps)
    per_network = {
        label: accuracy_by_round([t for t in acc_ts if t.network_label == label], complete_qs, reps).to_dict()
        for label in sorted(networks)
    }
    tokens = {label: token_cost_per_round(net, cfg["token_cap"]).to_dict() for label, net in sorted(networks.items())}
    consensus = consensus_split(transcripts, questions)
    influence = influence_table(transcripts, networks, questions, bins)
    transitions = transition_counts(transcripts, questions)
    correct_fraction = final_round_correct_fraction(transcripts, questions)

    summary = {
        "accuracy": accuracy.to_dict(),
        "accuracy_by_network": per_network,
        "tokens": tokens,
        "consensus": consensus.to_dict(),
        "influence": influence.to_dict(),
        "transitions": transitions.to_dict(),
        "correct_fraction": correct_fraction,
        "excluded_transcripts": corrupt,
        "questions_dropped_from_accuracy": dropped,
        "failed_responses": sum(t.failures() for t in transcripts),
    }

    out = run_dir / "reports"
    out.mkdir(exist_ok=True)
    written = []

    def dump(name: str, data) -> None:
        _dump_json(out / name, data)
        written.append(f"reports/{name}")

    def table(name: str, header, rows) -> None:
        _write_csv(out / name, header, rows)
        written.append(f"reports/{name}")

    dump("summary.json", summary)
    dump("accuracy.json", summary["accuracy"])
    table("accuracy.csv", *accuracy.csv_rows())
    table(
        "accuracy_by_network.csv",
        ["network_label", "round", "mean", "stderr"],
        [[label, row["round"], row["mean"], row["stderr"]] for label, rep in per_network.items() for row in rep["per_round"]],
    )
    dump("tokens.json", tokens)
    table("tokens.csv", ["network_label", "n", "n_edges", "cap", "tokens_per_round"],
          [[label, t["n"], t["n_edges"], t["cap"], t["tokens_per_round"]] for label, t in tokens.items()])
    dump("consensus.json", summary["consensus"])
    table("consensus.csv", ["network_label", "question_id", "repetition", "simpson", "system_correct"],
          [[e.network_label, e.question_id, e.repetition, e.simpson, int(e.system_correct)] for e in consensus.entries])
    dump("influence.json", summary["influence"])
    table("influence.csv", ["prev_correct", "bin_index", "lower", "upper", "probability", "n_samples"],
          [[int(r.prev_correct), r.bin_index, r.lower, r.upper, "" if r.probability is None else r.probability, r.n_samples]
           for r in influence.rows()])
    dump("transitions.json", summary["transitions"])
    table("transitions.csv", *transitions.csv_rows())
    table("correct_fraction.csv", ["network_label", "fraction"], sorted(correct_fraction.items()))

    manifest["reports"] = written
    _dump_json(run_dir / MANIFEST, manifest)
    return summary


def export_plot_data(run_dir: str | Path, figure: str) -> Path:
    """Write a long-format CSV for one figure and return its path."""
    if figure not in FIGURES:
        raise InvalidParameter(f"unknown figure {figure!r}; choose from {', '.join(FIGURES)}")
    run_dir = Path(run_dir)
    summary_path = run_dir / "reports" / "summary.json"
    summary = json.loads(summary_path.read_text()) if summary_path.exists() else analyze(run_dir)

    if figure == "accuracy_by_round":
        header = ["round", "mean", "stderr"]
        rows = [[r["round"], r["mean"], r["stderr"]] for r in summary["accuracy"]["per_round"]]
    elif figure == "influence":
        header = ["prev_correct", "frac_bin", "probability", "n_samples"]
        rows = [
            [int(r["prev_correct"]), (r["lower"] + r["upper"]) / 2, "" if r["probability"] is None else r["probability"], r["n_samples"]]
            for r in summary["influence"]["rows"]
        ]
    elif figure == "transitions":
        header = ["round_pair", "category", "count"]
        rows = [
            [f"{p['from_round']}->{p['to_round']}", cat, p[cat]]
            for p in summary["transitions"]["pairs"]
            for cat in ("correct->correct", "incorrect->incorrect", "incorrect->correct", "correct->incorrect")
        ]
    elif figure == "simpson_distribution":
        header = ["question_id", "lambda", "system_correct", "network_label", "repetition"]
        rows = [
            [e["question_id"], e["simpson"], int(e["system_correct"]), e["network_label"], e["repetition"]]
            for e in summary["consensus"]["entries"]
        ]
    else:
        header = ["network_label", "fraction"]
        rows = sorted(summary["correct_fraction"].items())

    path = run_dir / "reports" / f"plot_{figure}.csv"
    path.parent.mkdir(exist_ok=True)
    _write_csv(path, header, rows)
    manifest = read_manifest(run_dir)
    rel = f"reports/plot_{figure}.csv"
    if rel not in manifest.get("reports", []):
        manifest.setdefault("reports", []).append(rel)
        _dump_json(run_dir / MANIFEST, manifest)
    return path
