"""Check that training actually produces diverse skills, over several seeds.

Each check trains from scratch once per seed and compares against the
untrained policy evaluated on the same random stream.  These take a
while (minutes per seed with the default number of epochs).
"""

import itertools
import logging
import time
from dataclasses import replace
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
from scipy.stats import binomtest

from vendirl.kernels import SimilaritySpec, SkillSample
from vendirl.kernels.covariance import covariance_determinant
from vendirl.kernels.means import skill_mean
from vendirl.misl import MislHyper, discriminator_accuracy, misl_source
from vendirl.policy import PolicySkillSet
from vendirl.trainer import (
    EvalResult,
    TrainConfig,
    evaluate,
    init_rng,
    run,
    standalone_eval_rng,
    train,
)
from vendirl.vendi import effective_unique_skills

Pair = Tuple[float, float]


def untrained(cfg: TrainConfig) -> PolicySkillSet:
    return PolicySkillSet.create(cfg.n_skills, cfg.env, cfg.hyper, init_rng(cfg.seed))


def paired_eval(cfg: TrainConfig, trained: PolicySkillSet) -> Tuple[EvalResult, ...]:
    return (
        evaluate(untrained(cfg), cfg, standalone_eval_rng(cfg.seed)),
        evaluate(trained, cfg, standalone_eval_rng(cfg.seed)),
    )


def min_angle(samples: Sequence[SkillSample]) -> float:
    """Smallest angle between any two skill means, from the start."""
    means = [skill_mean(s) for s in samples]
    angles = []
    for a, b in itertools.combinations(means, 2):
        norm = np.linalg.norm(a) * np.linalg.norm(b)
        if norm == 0:
            angles.append(0.0)
        else:
            angles.append(float(np.arccos(np.clip(a @ b / norm, -1, 1))))
    return min(angles)


def det_spread(samples: Sequence[SkillSample]) -> float:
    dets = [covariance_determinant(s) for s in samples]
    return max(dets) - min(dets)


def check_vendi(cfg: TrainConfig) -> Dict[str, Pair]:
    policy, _ = train(cfg)
    before, after = paired_eval(cfg, policy)
    return {"eval_vs": (before.vs, after.vs)}


def check_shapes(cfg: TrainConfig) -> Dict[str, Pair]:
    results: Dict[str, Pair] = {}
    cosine = replace(cfg, spec=SimilaritySpec.single("cosine_of_means"))
    policy, _ = train(cosine)
    before, after = paired_eval(cosine, policy)
    results["min_angle"] = min_angle(before.samples), min_angle(after.samples)
    covariance = replace(cfg, spec=SimilaritySpec.single("covariance_structure"))
    policy, _ = train(covariance)
    before, after = paired_eval(covariance, policy)
    results["det_spread"] = det_spread(before.samples), det_spread(after.samples)
    return results


def check_combination(cfg: TrainConfig) -> Dict[str, Pair]:
    spec = SimilaritySpec(
        terms=(("cosine_of_means", 0.5), ("covariance_structure", 0.5))
    )
    combined = replace(cfg, spec=spec)
    policy, _ = train(combined)
    before, after = paired_eval(combined, policy)
    results: Dict[str, Pair] = {}
    for kind in spec.kinds:
        single = SimilaritySpec.single(kind)
        results[f"{kind}_vs"] = (
            effective_unique_skills(before.samples, single),
            effective_unique_skills(after.samples, single),
        )
    return results


def check_misl(cfg: TrainConfig) -> Dict[str, Pair]:
    source = misl_source(cfg, MislHyper())
    policy, _ = run(cfg, source)
    before, after = paired_eval(cfg, policy)
    # Final positions are what the skills are supposed to be told apart by
    final = np.array([t[-1] for s in after.samples for t in s.trajectories])
    goals = [i for i, s in enumerate(after.samples) for _ in s.trajectories]
    accuracy = discriminator_accuracy(source.disc, final, goals)
    return {
        "eval_vs": (before.vs, after.vs),
        "accuracy": (1.0 / cfg.n_skills, accuracy),
    }


CHECKS: Dict[str, Callable[[TrainConfig], Dict[str, Pair]]] = {
    "vendi": check_vendi,
    "shapes": check_shapes,
    "combination": check_combination,
    "misl": check_misl,
}


def benchmark(
    check: Callable[[TrainConfig], Dict[str, Pair]], cfg: TrainConfig, seeds: int
) -> Dict[str, List[Pair]]:
    pairs: Dict[str, List[Pair]] = {}
    for seed in range(seeds):
        start = time.time()
        for name, pair in check(replace(cfg, seed=seed)).items():
            pairs.setdefault(name, []).append(pair)
            print("seed %d %s: %.4f -> %.4f" % (seed, name, *pair))
        print("seed %d took %.2fs" % (seed, time.time() - start))
    return pairs


def summarize(pairs: Dict[str, List[Pair]]) -> None:
    for name, values in pairs.items():
        before, after = np.array(values).T
        wins = int(np.sum(after > before))
        # One-sided sign test against "training makes no difference"
        test = binomtest(wins, len(values), alternative="greater")
        print(
            "%s: untrained %.4f trained %.4f gain %.4f (%d/%d seeds, p=%.3f)"
            % (
                name,
                before.mean(),
                after.mean(),
                (after - before).mean(),
                wins,
                len(values),
                test.pvalue,
            )
        )


if __name__ == "__main__":
    import argparse

    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("check", choices=sorted(CHECKS))
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--epochs", type=int, default=500)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--verbose", "-v", action="store_true")
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if args.seeds < 1:
        parser.error("Need at least one seed")

    cfg = TrainConfig(epochs=args.epochs, threads=args.threads, eval_every=0)
    start = time.time()
    summarize(benchmark(CHECKS[args.check], cfg, args.seeds))
    print("All seeds took %.2fs" % (time.time() - start))
