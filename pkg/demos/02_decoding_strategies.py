"""All seven decoding strategies side by side on one model.

Mode-seeking strategies (greedy, beam) land below the entropy; sampling
strategies land around it.  The gap between the two is the whole story
told by the entropy-band analysis in the later demos.
"""

from infoband import (DecodeConfig, decode_one, information_content,
                      mc_entropy, train_ngram)

model = train_ngram(
    ["the cat sat", "the cat ran", "the dog sat", "a cat sat on a mat",
     "a dog ran", "the dog ran off", "a cat ran", "the mat sat flat"],
    order=3, smoothing=0.1, max_length=20,
)
# The support is far too large to enumerate, which is exactly the regime
# the Monte Carlo estimator exists for.
est = mc_entropy(model, 5000, seed=0)
h, sigma = est.mean, est.std
print(f"estimated entropy H = {h:.3f} nats (stderr {est.stderr:.3f}), sigma = {sigma:.3f}")
print(f"entropy band        = [{h - sigma:.3f}, {h + sigma:.3f}]\n")

suite = {
    "greedy": DecodeConfig("greedy"),
    "beam_5": DecodeConfig("beam", k=5),
    "beam_10": DecodeConfig("beam", k=10),
    "diverse_beam": DecodeConfig("diverse_beam", k=5, groups=5, diversity=0.7),
    "ancestral": DecodeConfig("ancestral", seed=7),
    "top_k": DecodeConfig("top_k", k=30, seed=7),
    "nucleus": DecodeConfig("nucleus", top_p=0.85, seed=7),
    "mbr": DecodeConfig("mbr", mbr_samples=32, seed=7),
}

rows = []
for name, cfg in suite.items():
    cand = decode_one(model, cfg)
    info = information_content(model, cand.sequence).total
    rows.append((info, name, cand.sequence.text(model.vocabulary)))

for info, name, text in sorted(rows):
    flag = "in band" if abs(info - h) <= sigma else ("below" if info < h else "above")
    print(f"  {name:13s} I = {info:7.3f}  ({flag:7s})  {text!r}")
