"""Monte Carlo entropy estimation against the exact enumeration value.

The estimator is the sample mean of information values of ancestral
samples; its standard error shrinks as 1/sqrt(M).  The table shows the
estimate closing in on the exact entropy as M grows, and a per-context
sweep shows the conditional version used by the experiment pipeline.
"""

from infoband import (PromptConditionedModel, conditional_entropy_sweep,
                      exact_entropy, mc_entropy, train_ngram)

model = train_ngram(["abab", "abba", "baab", "bbab", "aabb", "abbb"],
                    order=2, smoothing=0.1, max_length=10)
h, sigma = exact_entropy(model, 2_000_000)
print(f"exact entropy: {h:.4f} nats (sigma {sigma:.4f})\n")

print(f"{'M':>7} {'estimate':>9} {'stderr':>8} {'error':>8}")
for m in (10, 100, 1000, 10000):
    est = mc_entropy(model, m, seed=42)
    print(f"{m:7d} {est.mean:9.4f} {est.stderr:8.4f} {abs(est.mean - h):8.4f}")

print("\nconditional entropy per prompt prefix (M = 500):")
factory = lambda ctx: PromptConditionedModel(model, model.vocabulary.encode(ctx))
sweep = conditional_entropy_sweep(factory, ["a", "b", "ab", "bb"], 500, seed=0)
for ctx, est in sweep.estimates.items():
    cond = factory(ctx)
    exact_h, _ = exact_entropy(cond, 2_000_000)
    print(f"  {ctx!r:5s} estimate {est.mean:.4f} +- {est.stderr:.4f}, exact {exact_h:.4f}")
