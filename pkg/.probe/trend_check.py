import numpy as np, time
from cathtwin.catheter import JointLimits, RigGeometry
from cathtwin.planner import EnvConfig, InitDistribution, make_env, Policy
from cathtwin.geometry import synthesize_phantom
from cathtwin.probmap import sample_trajectories, build_probability_maps
from cathtwin.copilot import ControlMode
from cathtwin.simulate import jitter_target, run_scripted_session
from cathtwin.config import load_config
from cathtwin.stats import compare_groups
from cathtwin.viewmetrics import tip_trajectory_length

cfg = load_config()
model, target = synthesize_phantom()
rig = cfg.rig_for(model.insertion_port)
policy = Policy.from_json(open("/root/pkg/.probe/policy1000.json").read())

t0=time.time()
env = make_env(model, target, cfg.limits, cfg.env, cfg.init, rig, seed=0)
samples = sample_trajectories(policy, env, n_inits=200, seed=0)
maps = build_probability_maps(samples, cfg.limits, seed=0)
print(f"maps from {len(samples.rows)} rows ({samples.n_success}/200 ok) in {time.time()-t0:.0f}s", flush=True)

runs = {m: [] for m in (ControlMode.master_slave, ControlMode.copilot)}
for mode in runs:
    t0=time.time()
    for k in range(10):
        rng = np.random.default_rng(cfg.seed*7919+k)
        env = make_env(model, target, cfg.limits, cfg.env, cfg.init, rig, seed=cfg.seed*7919+k)
        env.reset()
        tt = jitter_target(target, cfg.simulate.target_jitter_mm, rng)
        r = run_scripted_session(env, policy if mode==ControlMode.copilot else None,
                                 maps if mode==ControlMode.copilot else None,
                                 mode, cfg.operator_profile(k), tt, cfg.session_config(),
                                 dt=cfg.simulate.dt, max_time_s=cfg.simulate.max_time_s, profile_index=k)
        runs[mode].append(r)
        print(f"  {mode.value} k={k}: success={r.success} interv={r.intervention_time:.1f} total={r.total_time:.1f}", flush=True)
    it = [x.intervention_time for x in runs[mode]]
    print(f"{mode.value}: success {sum(x.success for x in runs[mode])}/10, interv {np.mean(it):.1f}s ({time.time()-t0:.0f}s wall)", flush=True)

it_cp = np.array([x.intervention_time for x in runs[ControlMode.copilot]])
it_ms = np.array([x.intervention_time for x in runs[ControlMode.master_slave]])
ttl_cp = np.mean([tip_trajectory_length(x.trajectory.joints, rig) for x in runs[ControlMode.copilot]])
ttl_ms = np.mean([tip_trajectory_length(x.trajectory.joints, rig) for x in runs[ControlMode.master_slave]])
res = compare_groups(it_cp, it_ms)
print(f"RESULT: interv cp {it_cp.mean():.2f} < ms {it_ms.mean():.2f}; TTL cp {ttl_cp:.0f} vs ms {ttl_ms:.0f}; {res.test_used} p={res.p_value:.2e}", flush=True)
