import time, numpy as np
from cathtwin.geometry import synthesize_phantom
from cathtwin.catheter import JointLimits, RigGeometry
from cathtwin.planner import (EnvConfig, InitDistribution, make_env, train_sac,
                              SacConfig, evaluate)
model, target = synthesize_phantom()
rig = RigGeometry(insertion_port=model.insertion_port, passive_length=0.0, active_length=120.0)
limits = JointLimits.default()
def ma(x, w=50):
    c = np.cumsum(np.insert(x, 0, 0.0)); return (c[w:]-c[:-w])/w
for seed in (2, 3):
    env = make_env(model, target, limits, EnvConfig(), InitDistribution(), rig, seed=0)
    t0 = time.time()
    policy, curves = train_sac(env, SacConfig(episodes=1000, warmup_steps=6000), seed=seed)
    r, L = curves.rewards(), curves.lengths()
    m = ma(r); third = m[len(m)*2//3:]
    ev = make_env(model, target, limits, EnvConfig(), InitDistribution(), rig, seed=9)
    stats = evaluate(policy, ev, n=100, seed=42)
    print(f"[warm6k seed {seed}] {(time.time()-t0)/60:.1f}min MAend {m[-1]:.0f} "
          f"dip {third[0]-third.min():.0f} lenstd {np.std(L[-100:])/np.mean(L[-100:]):.3f} "
          f"succ {stats.success_rate:.2f} maxpos {stats.position_error_max:.1f} "
          f"maxang {stats.orientation_error_max:.1f}", flush=True)
