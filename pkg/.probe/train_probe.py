import time, numpy as np, json
from cathtwin.geometry import synthesize_phantom
from cathtwin.catheter import JointLimits, RigGeometry
from cathtwin.planner import (EnvConfig, InitDistribution, make_env, train_sac,
                              SacConfig, evaluate)

model, target = synthesize_phantom()
rig = RigGeometry(insertion_port=model.insertion_port, passive_length=0.0, active_length=120.0)
limits = JointLimits.default()
env = make_env(model, target, limits, EnvConfig(), InitDistribution(), rig, seed=0)

t0 = time.time()
policy, curves = train_sac(env, SacConfig(episodes=800), seed=0)
train_time = time.time() - t0
r = curves.rewards(); L = curves.lengths()

def ma(x, w=50):
    c = np.cumsum(np.insert(x, 0, 0.0))
    return (c[w:] - c[:-w]) / w

m = ma(r)
print(f"train {train_time/60:.1f} min")
print("reward MA(50) at [100,200,300,400,500,600,700,750]:",
      [round(float(m[i]),1) for i in [100,200,300,400,500,600,700,749] if i < len(m)])
print("len MA(50):", [round(float(x),1) for x in ma(L)[::100]])
print("last100 len std/mean:", float(np.std(L[-100:])/np.mean(L[-100:])))

ev_env = make_env(model, target, limits, EnvConfig(), InitDistribution(), rig, seed=123)
t0=time.time()
stats = evaluate(policy, ev_env, n=100, seed=42)
print(f"eval {time.time()-t0:.0f}s:", stats.summary())
fails = [rec for rec in stats.records if rec["terminal"] != "success"]
print("failures:", fails[:5], "count", len(fails))
with open("/root/pkg/.probe/policy.json","w") as f: f.write(policy.to_json())
with open("/root/pkg/.probe/curves.csv","w") as f: f.write(curves.to_csv())
