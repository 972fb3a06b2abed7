"""Random binning near the Slepian-Wolf threshold, at short block length.

The destination decodes (S1, S2) from bin indices plus its side
information. Sweeping the S1 bin rate across H(S1|S2,W) shows the error
rate fall. At m = 10 symbols the transition is wide: the
information density -log p / m has a standard deviation of roughly a
quarter bit, so rates a few tenths of a bit above the entropy still fail
sometimes. Strong typicality at small epsilon is far stricter than
maximum-likelihood decoding at this length.

Run: python demos/04_slepian_wolf_threshold.py
"""
from marcsep import SchemeConfig, entropy_vector, threshold_sweep
from marcsep.instances import doubly_symmetric_sources

sources = doubly_symmetric_sources(0.1, w="s2", w_noise=0.1, w3="pair")
h = entropy_vector(sources)
print(f"H(S1|S2,W) = {h.dest_s1:.4f}   H(S2|S1,W) = {h.dest_s2:.4f}")

rates = [round(h.dest_s1 + d, 3) for d in (-0.2, 0.0, 0.2, 0.4, 0.6, 0.8)]
for decoder in ("map", "typical"):
    cfg = SchemeConfig(sources, m=10, relay_rates=(0, 0), dest_rates=(0.5, 1.0), decoder=decoder)
    res = threshold_sweep(cfg, rates, trials=150, seed=0)
    print(f"\n{decoder} decoder")
    for row in res.rows:
        bar = "#" * int(round(40 * row["error_rate"]))
        print(f"  R1d={row['rate']:.3f} margin={row['margin']:+.3f}  err={row['error_rate']:.3f} {bar}")
