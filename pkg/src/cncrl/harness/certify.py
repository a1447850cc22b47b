"""Oracle certification: on a corpus of explicit MDPs, check that values
read off the window chain's stationary law match the finite-horizon
backup to 1e-9."""

from __future__ import annotations

from importlib import resources

import numpy as np

from ..envs.explicit import load_explicit_mdp
from ..oracle import (
    build_augmented_chain,
    build_snake_chain,
    check_properties,
    q_via_dp,
    q_via_stationary,
    return_conditionals,
    random_certified_case,
    random_policy,
    solve_snake_stationary,
)
from ..errors import CncrlError
from .config import out_dir, trial_streams
from .reporting import write_csv, write_manifest

GAP_TOLERANCE = 1e-9


def bundled_mdp_path(name: str):
    return resources.files("cncrl.data.mdps") / f"{name}.mdp"


def certify_case(mdp, policy, horizon: int, case_id: str, dump_dir=None):
    """One corpus entry -> report row dict.  With `dump_dir`, the exact
    value table and stationary return marginals are written as CSV."""
    row = {
        "id": case_id, "n_states": mdp.n_states, "n_actions": mdp.n_actions,
        "horizon": horizon, "windows": 0, "irreducible": False, "aperiodic": False,
        "positive_recurrent": False, "residual": float("nan"),
        "gap": float("nan"), "included": False, "status": "ok",
    }
    try:
        chain = build_augmented_chain(mdp, policy)
        props = check_properties(chain)
        row.update(irreducible=props.irreducible, aperiodic=props.aperiodic,
                   positive_recurrent=props.positive_recurrent)
        snake = build_snake_chain(chain, horizon)
        row["windows"] = snake.n
        result = solve_snake_stationary(snake)
        row["residual"] = result.residual
        if not (props.irreducible and props.aperiodic):
            return row
        cond = return_conditionals(snake, result.dist)
        q_nu = q_via_stationary(cond)
        q_dp = q_via_dp(mdp, policy, horizon)
        mask = cond.defined
        row["gap"] = float(np.max(np.abs(q_nu[mask] - q_dp[mask])))
        row["included"] = True
        if dump_dir is not None:
            from ..oracle import write_marginals_csv, write_q_csv

            tag = case_id.replace(":", "_")
            write_q_csv(dump_dir / f"{tag}_q.csv", q_nu)
            write_marginals_csv(dump_dir / f"{tag}_nu.csv", cond)
    except CncrlError as exc:
        row["status"] = f"error: {exc}"
    return row


def run_oracle_cert(cfg: dict):
    """Returns (output dir, all included gaps within tolerance)."""
    out = out_dir(cfg)
    dump_dir = None
    if cfg.get("dump_tables", False):
        dump_dir = out / "tables"
        dump_dir.mkdir(exist_ok=True)
    rows = []
    if cfg.get("include_bundled", True):
        for name, horizon in (("selfloop1", 3), ("cycle2", 2), ("chain5", 3),
                              ("twostate", 2), ("rate3", 2)):
            mdp = load_explicit_mdp(bundled_mdp_path(name))
            rng = np.random.default_rng(cfg["seed"])
            policy = random_policy(rng, mdp.n_states, mdp.n_actions)
            rows.append(certify_case(mdp, policy, horizon, f"bundled:{name}",
                                     dump_dir=dump_dir))
    count = int(cfg.get("count", 100))
    rng = trial_streams(cfg["seed"], 0, names=("corpus",))["corpus"]
    for i in range(count):
        mdp, policy, horizon, _ = random_certified_case(
            rng,
            max_states=int(cfg.get("max_states", 6)),
            max_actions=int(cfg.get("max_actions", 3)),
            max_rewards=int(cfg.get("max_rewards", 3)),
            max_horizon=int(cfg.get("max_horizon", 4)))
        rows.append(certify_case(mdp, policy, horizon, f"random:{i}"))

    ok = all(not r["included"] or r["gap"] <= GAP_TOLERANCE for r in rows)
    ok = ok and all(r["status"] == "ok" for r in rows)
    write_manifest(out / "manifest.txt", cfg)
    header = ["id", "n_states", "n_actions", "horizon", "windows", "irreducible",
              "aperiodic", "positive_recurrent", "residual", "gap", "included", "status"]
    write_csv(out / "report.csv", header, [[r[h] for h in header] for r in rows])
    return out, ok
