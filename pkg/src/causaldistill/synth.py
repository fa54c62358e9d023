"""Synthetic risk data with known causal ground truth.

Generators: random-DAG Bayesian networks sampled ancestrally with a
quota-sampled binary risk label, the four-feature ablation pair (one true
cause, with and without a hidden driver behind the other three features),
a role-labeled benchmark (confounder / adjustment / instrumental /
spurious covariates around one intervention feature), and dose-response
benchmarks whose true response curve and naive-estimator bias are known in
closed form. Everything is a pure function of (spec, seed).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .data import Dataset, Feature, FeatureSchema
from .errors import GenerationFailedError, InputError

ROLES = ("confounder", "adjustment", "instrumental", "spurious")


def _sigmoid(x):
    return 0.5 * (np.tanh(0.5 * np.asarray(x, dtype=np.float64)) + 1.0)


@dataclass(frozen=True)
class Node:
    """One variable: its parents and the structural equation that samples it."""

    name: str
    parents: tuple[str, ...] = ()
    kind: str = "continuous"
    levels: int = 0
    equation: dict | None = None


@dataclass(frozen=True)
class BayesNet:
    """Nodes in topological order plus an optional risk-probability rule."""

    nodes: tuple[Node, ...]
    risk: dict | None = None

    def __post_init__(self):
        seen = set()
        for node in self.nodes:
            for p in node.parents:
                if p not in seen:
                    raise InputError(f"node {node.name!r}: parent {p!r} does not precede it")
            if node.name in seen:
                raise InputError(f"duplicate node {node.name!r}")
            seen.add(node.name)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n.name for n in self.nodes)

    @property
    def edges(self) -> tuple[tuple[str, str], ...]:
        out = []
        for node in self.nodes:
            out.extend((p, node.name) for p in node.parents)
        return tuple(out)

    def is_acyclic(self) -> bool:
        """Explicit topological-sort check over the edge set."""
        order = {}
        remaining = {n.name: set(n.parents) for n in self.nodes}
        rank = 0
        while remaining:
            ready = [name for name, deps in remaining.items() if not deps]
            if not ready:
                return False
            for name in ready:
                order[name] = rank
                del remaining[name]
            for deps in remaining.values():
                deps.difference_update(ready)
            rank += 1
        return True

    def to_json(self) -> dict:
        return {
            "nodes": [
                {
                    "name": n.name,
                    "parents": list(n.parents),
                    "kind": n.kind,
                    "levels": n.levels,
                    "equation": n.equation,
                }
                for n in self.nodes
            ],
            "risk": self.risk,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "BayesNet":
        nodes = tuple(
            Node(d["name"], tuple(d.get("parents", ())), d.get("kind", "continuous"),
                 d.get("levels", 0), d.get("equation"))
            for d in doc["nodes"]
        )
        return cls(nodes, doc.get("risk"))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "BayesNet":
        path = Path(path)
        if not path.exists():
            raise InputError(f"net spec file not found: {path}")
        return cls.from_json(json.loads(path.read_text(encoding="utf-8")))


def random_dag(n_nodes: int, edge_prob: float, seed: int) -> BayesNet:
    """Random DAG skeleton: nodes in a random order, edges only forward."""
    if n_nodes < 1:
        raise InputError("need at least one node")
    if not 0 <= edge_prob <= 1:
        raise InputError("edge_prob must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n_nodes)
    names = [f"x{i}" for i in order]
    nodes = []
    for pos, name in enumerate(names):
        mask = rng.random(pos) < edge_prob
        parents = tuple(names[k] for k in range(pos) if mask[k])
        nodes.append(Node(name, parents))
    return BayesNet(tuple(nodes))


def assign_default_equations(net: BayesNet, seed: int, binary_fraction: float = 0.25,
                             categorical_fraction: float = 0.1) -> BayesNet:
    """Fill a skeleton with default equations.

    Roots draw from Bernoulli / Gaussian / categorical distributions;
    children combine parents linearly plus tanh terms with Gaussian noise
    (binary children through a logistic link).
    """
    rng = np.random.default_rng(seed)
    nodes = []
    for node in net.nodes:
        if not node.parents:
            u = rng.random()
            if u < binary_fraction:
                nodes.append(replace(node, kind="binary",
                                     equation={"type": "bernoulli", "p": round(float(rng.uniform(0.2, 0.8)), 3)}))
            elif u < binary_fraction + categorical_fraction:
                k = int(rng.integers(3, 5))
                probs = rng.dirichlet(np.full(k, 3.0))
                nodes.append(replace(node, kind="categorical", levels=k,
                                     equation={"type": "categorical", "probs": [float(p) for p in probs]}))
            else:
                nodes.append(replace(node, kind="continuous",
                                     equation={"type": "gaussian", "mean": 0.0, "sd": 1.0}))
            continue
        weights = {p: float(rng.uniform(0.3, 0.9) * rng.choice((-1.0, 1.0))) for p in node.parents}
        tanh_w = {p: float(rng.uniform(0.0, 0.5)) for p in node.parents}
        if rng.random() < binary_fraction:
            nodes.append(replace(node, kind="binary",
                                 equation={"type": "logistic", "weights": weights, "bias": 0.0}))
        else:
            nodes.append(replace(node, kind="continuous",
                                 equation={"type": "linear_tanh", "weights": weights,
                                           "tanh_weights": tanh_w, "bias": 0.0,
                                           "noise_sd": round(float(rng.uniform(0.4, 0.8)), 3)}))
    return BayesNet(tuple(nodes), net.risk)


def _eval_score(eq: dict, cols: dict, n: int) -> np.ndarray:
    score = np.full(n, float(eq.get("bias", 0.0)))
    for p, w in eq.get("weights", {}).items():
        score += w * cols[p]
    for p, w in eq.get("tanh_weights", {}).items():
        score += w * np.tanh(cols[p])
    return score


def _sample_node(node: Node, cols: dict, n: int, rng) -> np.ndarray:
    eq = node.equation
    if eq is None:
        raise InputError(f"node {node.name!r} has no structural equation")
    t = eq["type"]
    if t == "gaussian":
        return rng.normal(eq.get("mean", 0.0), eq.get("sd", 1.0), n)
    if t == "uniform":
        return rng.uniform(eq["low"], eq["high"], n)
    if t == "bernoulli":
        return (rng.random(n) < eq["p"]).astype(np.float64)
    if t == "categorical":
        probs = np.asarray(eq["probs"], dtype=np.float64)
        return rng.choice(len(probs), size=n, p=probs / probs.sum()).astype(np.float64)
    if t == "copy":
        return cols[eq["parent"]].copy()
    if t == "linear_tanh":
        score = _eval_score(eq, cols, n)
        sd = eq.get("noise_sd", 0.0)
        if sd > 0:
            score = score + rng.normal(0.0, sd, n)
        return score
    if t == "logistic":
        return (rng.random(n) < _sigmoid(_eval_score(eq, cols, n))).astype(np.float64)
    raise InputError(f"node {node.name!r}: unknown equation type {t!r}")


def _schema_from_samples(net: BayesNet, cols: dict) -> FeatureSchema:
    feats = []
    for node in net.nodes:
        if node.kind == "binary":
            feats.append(Feature(node.name, "binary"))
        elif node.kind == "categorical":
            feats.append(Feature(node.name, "categorical", levels=node.levels))
        else:
            col = cols[node.name]
            lo, hi = float(col.min()), float(col.max())
            if lo == hi:
                lo, hi = lo - 0.5, hi + 0.5
            feats.append(Feature(node.name, "continuous", low=lo, high=hi))
    return FeatureSchema(feats)


def _risk_probability(net: BayesNet, cols: dict, n: int) -> np.ndarray:
    if net.risk is None:
        raise InputError("net has no risk rule")
    if net.risk.get("type", "logistic") != "logistic":
        raise InputError(f"unknown risk rule type {net.risk.get('type')!r}")
    return _sigmoid(_eval_score(net.risk, cols, n))


def sample_bayes_net(net: BayesNet, n: int, seed: int) -> Dataset:
    """Ancestral sampling in topological order; n i.i.d. rows.

    Labels are Bernoulli draws from the risk rule when one is defined,
    otherwise all zero.
    """
    if n < 1:
        raise InputError("need n >= 1")
    rng = np.random.default_rng(seed)
    cols: dict[str, np.ndarray] = {}
    for node in net.nodes:
        cols[node.name] = _sample_node(node, cols, n, rng)
    X = np.column_stack([cols[name] for name in net.names])
    if net.risk is not None:
        y = (rng.random(n) < _risk_probability(net, cols, n)).astype(np.int64)
    else:
        y = np.zeros(n, dtype=np.int64)
    return Dataset(X, y, _schema_from_samples(net, cols))


def generate_risk_dataset(net: BayesNet, n_pos: int, n_neg: int, seed: int,
                          max_factor: int = 200) -> Dataset:
    """Quota sampling until exactly ``n_pos`` positive and ``n_neg`` negative rows.

    Rows are drawn from the net in batches and kept per class until both
    quotas fill; the assembled dataset is then shuffled (seeded). Fails
    with :class:`GenerationFailedError` if a class is effectively
    unreachable within ``max_factor * (n_pos + n_neg)`` draws.
    """
    if net.risk is None:
        raise InputError("generate_risk_dataset needs a net with a risk rule")
    if n_pos < 1 or n_neg < 1:
        raise InputError("need positive class quotas")
    rng = np.random.default_rng(seed)
    want = n_pos + n_neg
    batch = max(2048, want // 4)
    pos_rows, neg_rows = [], []
    pos_have = neg_have = 0
    drawn = 0
    while pos_have < n_pos or neg_have < n_neg:
        if drawn >= max_factor * want:
            raise GenerationFailedError(
                f"quota unmet after {drawn} draws ({pos_have}/{n_pos} positive, {neg_have}/{n_neg} negative)"
            )
        cols: dict[str, np.ndarray] = {}
        for node in net.nodes:
            cols[node.name] = _sample_node(node, cols, batch, rng)
        y = (rng.random(batch) < _risk_probability(net, cols, batch)).astype(np.int64)
        X = np.column_stack([cols[name] for name in net.names])
        drawn += batch
        if pos_have < n_pos:
            take = X[y == 1][: n_pos - pos_have]
            pos_rows.append(take)
            pos_have += len(take)
        if neg_have < n_neg:
            take = X[y == 0][: n_neg - neg_have]
            neg_rows.append(take)
            neg_have += len(take)
    X = np.vstack(pos_rows + neg_rows)
    y = np.concatenate([np.ones(n_pos, dtype=np.int64), np.zeros(n_neg, dtype=np.int64)])
    order = rng.permutation(want)
    X, y = X[order], y[order]
    cols = {name: X[:, j] for j, name in enumerate(net.names)}
    return Dataset(X, y, _schema_from_samples(net, cols))


def default_risk_net(seed: int, n_features: int = 20, edge_prob: float = 0.15) -> BayesNet:
    """The stock risk generator: a random DAG over ``n_features`` features
    whose risk probability is a logistic score over a random node subset."""
    skeleton = random_dag(n_features, edge_prob, seed)
    net = assign_default_equations(skeleton, seed + 1)
    rng = np.random.default_rng(seed + 2)
    k = min(n_features, int(rng.integers(3, 7)))
    drivers = rng.choice(net.names, size=k, replace=False)
    weights = {str(name): float(rng.uniform(0.6, 1.2) * rng.choice((-1.0, 1.0))) for name in drivers}
    tanh_w = {str(name): float(rng.uniform(0.0, 0.6)) for name in drivers}
    risk = {"type": "logistic", "weights": weights, "tanh_weights": tanh_w, "bias": -2.0}
    return BayesNet(net.nodes, risk)


# -- four-feature ablation pair ----------------------------------------------

def hidden_variable_pair(seed: int, n_pos: int = 1000, n_neg: int = 9000,
                         coef: dict | None = None):
    """The ablation pair: four observed features, one true cause.

    Variant (a): ``x0`` causes the outcome and also drives ``x1..x3``; the
    trio is informative only through ``x0``. Variant (b): a latent driver
    ``h1`` (not exported) generates ``x1..x3`` and feeds the outcome
    directly, so the trio is a noisy proxy for a hidden cause while ``x0``
    stays the only observed cause. Returns ``(dataset_a, dataset_b,
    ground_truth)`` with the structural coefficients for oracle checks.
    """
    defaults = {
        "proxy_on_x0": 0.6,      # (a): x_k = proxy_on_x0 * x0 + noise
        "proxy_noise_sd_a": 1.0,
        # (b): x1 depends on h1 alone; x2, x3 load on both the cause and
        # h1, so leaning on them injects correlated noise that never
        # averages out
        "x1_on_h1": 0.9,
        "x1_noise_sd": 0.45,
        "proxy_on_x0_b": 0.8,
        "proxy_on_h1": 0.8,
        "proxy_noise_sd_b": 0.4,
        "outcome_x0": 8.0,       # logistic weight on tanh(x0)
        "outcome_h1": 0.6,       # (b) only: logistic weight on h1
        "bias_a": -4.5,
        "bias_b": -4.5,
    }
    coef = {**defaults, **(coef or {})}

    nodes_a = (
        Node("x0", (), "continuous", equation={"type": "gaussian", "mean": 0.0, "sd": 1.0}),
        *(
            Node(f"x{k}", ("x0",), "continuous",
                 equation={"type": "linear_tanh", "weights": {"x0": coef["proxy_on_x0"]},
                           "bias": 0.0, "noise_sd": coef["proxy_noise_sd_a"]})
            for k in (1, 2, 3)
        ),
    )
    risk_a = {"type": "logistic", "weights": {}, "tanh_weights": {"x0": coef["outcome_x0"]},
              "bias": coef["bias_a"]}
    net_a = BayesNet(nodes_a, risk_a)

    nodes_b = (
        Node("h1", (), "continuous", equation={"type": "gaussian", "mean": 0.0, "sd": 1.0}),
        Node("x0", (), "continuous", equation={"type": "gaussian", "mean": 0.0, "sd": 1.0}),
        Node("x1", ("h1",), "continuous",
             equation={"type": "linear_tanh", "weights": {"h1": coef["x1_on_h1"]},
                       "bias": 0.0, "noise_sd": coef["x1_noise_sd"]}),
        *(
            Node(f"x{k}", ("h1", "x0"), "continuous",
                 equation={"type": "linear_tanh",
                           "weights": {"x0": coef["proxy_on_x0_b"], "h1": coef["proxy_on_h1"]},
                           "bias": 0.0, "noise_sd": coef["proxy_noise_sd_b"]})
            for k in (2, 3)
        ),
    )
    risk_b = {"type": "logistic", "weights": {"h1": coef["outcome_h1"]},
              "tanh_weights": {"x0": coef["outcome_x0"]}, "bias": coef["bias_b"]}
    net_b = BayesNet(nodes_b, risk_b)

    data_a = generate_risk_dataset(net_a, n_pos, n_neg, seed)
    data_b_full = generate_risk_dataset(net_b, n_pos, n_neg, seed + 1)
    # h1 is latent: drop its column before exporting
    keep = [j for j, name in enumerate(net_b.names) if name != "h1"]
    schema_b = FeatureSchema([data_b_full.schema[j] for j in keep])
    data_b = Dataset(data_b_full.X[:, keep], data_b_full.y, schema_b)

    var_b = coef["proxy_on_x0_b"] ** 2 + coef["proxy_on_h1"] ** 2 + coef["proxy_noise_sd_b"] ** 2
    ground_truth = {
        "cause": "x0",
        "spurious": ("x1", "x2", "x3"),
        "coefficients": coef,
        "corr_a_x0_proxy": coef["proxy_on_x0"]
        / math.sqrt(coef["proxy_on_x0"] ** 2 + coef["proxy_noise_sd_a"] ** 2),
        "corr_b_h1_proxy": coef["proxy_on_h1"] / math.sqrt(var_b),
        "corr_b_x0_proxy": coef["proxy_on_x0_b"] / math.sqrt(var_b),
        "corr_b_h1_x1": coef["x1_on_h1"]
        / math.sqrt(coef["x1_on_h1"] ** 2 + coef["x1_noise_sd"] ** 2),
    }
    return data_a, data_b, ground_truth


# -- role-labeled benchmark ----------------------------------------------------

@dataclass(frozen=True)
class RoleLabeledSpec:
    """Ground-truth covariate roles relative to one intervention feature."""

    intervention: str
    roles: dict[str, str]  # covariate name -> role
    edges: tuple[tuple[str, str], ...]  # structural edges, outcome node named "risk"

    def __post_init__(self):
        for name, role in self.roles.items():
            if role not in ROLES:
                raise InputError(f"unknown role {role!r} for {name!r}")

    def of_role(self, *roles: str) -> tuple[str, ...]:
        return tuple(name for name, role in self.roles.items() if role in roles)

    def check_consistency(self) -> None:
        """Roles must match the edge structure: confounders point at both the
        intervention and the outcome, adjustment at the outcome only,
        instrumental at the intervention only, spurious at neither."""
        into_t = {src for src, dst in self.edges if dst == self.intervention}
        into_y = {src for src, dst in self.edges if dst == "risk"}
        for name, role in self.roles.items():
            hits_t, hits_y = name in into_t, name in into_y
            expected = {
                "confounder": (True, True),
                "adjustment": (False, True),
                "instrumental": (True, False),
                "spurious": (False, False),
            }[role]
            if (hits_t, hits_y) != expected:
                raise InputError(f"{name!r} labeled {role} but edges say into_t={hits_t}, into_y={hits_y}")


def role_labeled_benchmark(n: int, seed: int, n_pos: int | None = None):
    """Binary intervention ``t`` with 2 covariates of each role.

    Confounders drive both ``t`` and the outcome, adjustment variables the
    outcome only, instrumental variables ``t`` only, spurious variables
    neither. Returns ``(dataset, spec)``; the outcome is a logistic draw,
    so roughly a third of labels are positive.
    """
    rng = np.random.default_rng(seed)
    c1, c2, p1, p2, i1, i2, s1, s2 = rng.normal(size=(8, n))
    t = (rng.random(n) < _sigmoid(0.9 * (c1 + c2) + 0.9 * (i1 + i2))).astype(np.float64)
    y = (rng.random(n) < _sigmoid(1.2 * t + 0.8 * (c1 + c2) + 0.8 * (p1 + p2) - 1.2)).astype(np.int64)
    cols = {"t": t, "c1": c1, "c2": c2, "p1": p1, "p2": p2, "i1": i1, "i2": i2, "s1": s1, "s2": s2}
    feats = [Feature("t", "binary")]
    for name in ("c1", "c2", "p1", "p2", "i1", "i2", "s1", "s2"):
        col = cols[name]
        feats.append(Feature(name, "continuous", low=float(col.min()), high=float(col.max())))
    X = np.column_stack([cols[f.name] for f in feats])
    dataset = Dataset(X, y, FeatureSchema(feats))
    spec = RoleLabeledSpec(
        intervention="t",
        roles={"c1": "confounder", "c2": "confounder", "p1": "adjustment", "p2": "adjustment",
               "i1": "instrumental", "i2": "instrumental", "s1": "spurious", "s2": "spurious"},
        edges=(("c1", "t"), ("c2", "t"), ("i1", "t"), ("i2", "t"),
               ("c1", "risk"), ("c2", "risk"), ("p1", "risk"), ("p2", "risk"), ("t", "risk")),
    )
    return dataset, spec


# -- dose-response benchmarks ---------------------------------------------------

DOSE_KINDS = ("randomized", "confounded-linear", "confounded-nonlinear")


@dataclass(frozen=True)
class DoseResponseBenchmark:
    """Continuous-treatment benchmark with analytic truth.

    ``mu_true(x)`` is the interventional response curve and
    ``naive_bias(x)`` the closed-form bias of the population stratified
    estimator ``E[Y | X_dose = x] - mu_true(x)`` (zero for the randomized
    kind). The outcome is continuous.
    """

    kind: str
    dataset: Dataset
    dose_feature: str
    sd_c: float
    sd_noise: float

    @property
    def kappa(self) -> float:
        """Gaussian conditioning slope: E[C | dose = x] = kappa * x."""
        return self.sd_c**2 / (self.sd_c**2 + self.sd_noise**2)

    def mu_true(self, x):
        x = np.asarray(x, dtype=np.float64)
        return 0.5 + 0.3 * np.tanh(x)

    def naive_bias(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "randomized":
            return np.zeros_like(x)
        if self.kind == "confounded-linear":
            return 0.4 * self.kappa * x
        # nonlinear confounding: E[sin(C) | X=x] = sin(kappa x) * exp(-v/2), v = Var(C | dose)
        v = self.kappa * self.sd_noise**2
        return 0.4 * np.sin(self.kappa * x) * math.exp(-0.5 * v)


def dose_response_benchmark(kind: str, n: int, seed: int,
                            sd_c: float = 1.0, sd_noise: float = 1.0,
                            dose_bound: float = 3.0) -> DoseResponseBenchmark:
    """Generate a dose-response dataset of the given kind.

    The structural outcome is ``Y = 0.5 + 0.3*tanh(dose) + 0.4*g(C) + eps``
    with ``g`` identity (linear kinds) or ``sin`` (nonlinear kind); the dose
    equals ``C + noise`` for confounded kinds and an independent Gaussian
    when randomized. ``C ~ N(0, sd_c^2)``, ``noise ~ N(0, sd_noise^2)``.

    Rows are rejection-sampled to ``|dose| <= dose_bound`` so the response
    grid's endpoints sit in well-populated territory. The symmetric window
    leaves the closed forms exact: conditioning on ``dose = x`` pointwise is
    unaffected by truncating the dose marginal, and ``E[g(C)]`` over the
    kept population stays zero by symmetry.
    """
    if kind not in DOSE_KINDS:
        raise InputError(f"kind must be one of {DOSE_KINDS}")
    if dose_bound <= 0:
        raise InputError("dose_bound must be positive")
    rng = np.random.default_rng(seed)
    c_parts, dose_parts = [], []
    have = 0
    while have < n:
        c_raw = rng.normal(0.0, sd_c, n)
        if kind == "randomized":
            dose_raw = rng.normal(0.0, math.hypot(sd_c, sd_noise), n)
        else:
            dose_raw = c_raw + rng.normal(0.0, sd_noise, n)
        keep = np.abs(dose_raw) <= dose_bound
        c_parts.append(c_raw[keep][: n - have])
        dose_parts.append(dose_raw[keep][: n - have])
        have += len(c_parts[-1])
    c = np.concatenate(c_parts)
    dose = np.concatenate(dose_parts)
    g = np.sin(c) if kind == "confounded-nonlinear" else c
    y = 0.5 + 0.3 * np.tanh(dose) + 0.4 * g + rng.normal(0.0, 0.1, n)
    feats = [
        Feature("dose", "continuous", low=float(dose.min()), high=float(dose.max())),
        Feature("c", "continuous", low=float(c.min()), high=float(c.max())),
    ]
    schema = FeatureSchema(feats, label_kind="continuous")
    dataset = Dataset(np.column_stack([dose, c]), y, schema)
    return DoseResponseBenchmark(kind, dataset, "dose", sd_c, sd_noise)


# -- named builtin generators (CLI surface) -------------------------------------

BUILTIN_SPECS = ("risk20", "hidden_pair_a", "hidden_pair_b", "role_benchmark",
                 "dose_randomized", "dose_confounded", "dose_confounded_nonlinear")


def generate_builtin(name: str, seed: int, n_pos: int = 1000, n_neg: int = 9000):
    """Build a named dataset; returns ``(dataset, ground_truth_dict)``."""
    if name == "risk20":
        net = default_risk_net(seed)
        data = generate_risk_dataset(net, n_pos, n_neg, seed)
        return data, {"generator": "risk20", "net": net.to_json()}
    if name in ("hidden_pair_a", "hidden_pair_b"):
        data_a, data_b, truth = hidden_variable_pair(seed, n_pos, n_neg)
        data = data_a if name.endswith("_a") else data_b
        return data, {"generator": name, **{k: (list(v) if isinstance(v, tuple) else v) for k, v in truth.items()}}
    if name == "role_benchmark":
        data, spec = role_labeled_benchmark(n_pos + n_neg, seed)
        return data, {"generator": name, "intervention": spec.intervention,
                      "roles": spec.roles, "edges": [list(e) for e in spec.edges]}
    if name.startswith("dose_"):
        kind = {"dose_randomized": "randomized", "dose_confounded": "confounded-linear",
                "dose_confounded_nonlinear": "confounded-nonlinear"}[name]
        bench = dose_response_benchmark(kind, n_pos + n_neg, seed)
        return bench.dataset, {"generator": name, "kind": kind, "dose_feature": bench.dose_feature}
    raise InputError(f"unknown builtin spec {name!r}; available: {', '.join(BUILTIN_SPECS)}")
