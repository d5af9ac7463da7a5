import time, numpy as np
from cathtwin.geometry import synthesize_phantom
from cathtwin.catheter import JointLimits, RigGeometry
from cathtwin.planner import (EnvConfig, InitDistribution, make_env, train_sac,
                              SacConfig, evaluate)

model, target = synthesize_phantom()
rig = RigGeometry(insertion_port=model.insertion_port, passive_length=0.0, active_length=120.0)
limits = JointLimits.default()

def ma(x, w=50):
    c = np.cumsum(np.insert(x, 0, 0.0))
    return (c[w:] - c[:-w]) / w

for seed in (0, 1):
    env = make_env(model, target, limits, EnvConfig(), InitDistribution(), rig, seed=0)
    t0 = time.time()
    policy, curves = train_sac(env, SacConfig(episodes=1000), seed=seed)
    r, L = curves.rewards(), curves.lengths()
    m = ma(r)
    third = m[len(m)*2//3:]
    rng_ = m.max()-m.min()
    print(f"[seed {seed}] train {(time.time()-t0)/60:.1f} min; MA end {m[-1]:.0f}; "
          f"final-third dip {third[0]-third.min():.0f} vs 5%range {0.05*rng_:.0f}; "
          f"halves {np.mean(third[:len(third)//2]):.0f} -> {np.mean(third[len(third)//2:]):.0f}; "
          f"len std/mean {np.std(L[-100:])/np.mean(L[-100:]):.3f}")
    ev = make_env(model, target, limits, EnvConfig(), InitDistribution(), rig, seed=9)
    stats = evaluate(policy, ev, n=100, seed=42)
    print(f"[seed {seed}]", stats.summary())
    bad = [x for x in stats.records if x["terminal"] != "success"]
    print(f"[seed {seed}] failures:", [(round(b['position_error_mm'],1), round(b['orientation_error_deg'],1)) for b in bad])
    if seed == 0:
        with open("/root/pkg/.probe/policy1000.json","w") as f: f.write(policy.to_json())
        with open("/root/pkg/.probe/curves1000.csv","w") as f: f.write(curves.to_csv())
