use causal_rules::config::KrrConfig;
use causal_rules::krr::{feature_map, krr_fit_on};
use numkit::seeded_rng;
use rand::Rng;
use rand_distr::StandardNormal;

fn gaussian_density(value: f64, mean: f64, variance: f64) -> f64 {
    let diff = value - mean;
    (-diff * diff / (2.0 * variance)).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
}

fn main() {
    let mut rng = seeded_rng(900);
    let (mut xs, mut ys, mut env) = (Vec::new(), Vec::new(), Vec::new());
    for e in 0..2usize {
        let sd = if e == 0 { 0.7 } else { 1.9 };
        for _ in 0..2000 {
            let cause = sd * rng.sample::<f64, _>(StandardNormal);
            let effect = cause + 0.25 * cause * cause * cause + 0.5 * rng.sample::<f64, _>(StandardNormal);
            xs.push(effect); ys.push(cause); env.push(e);
        }
    }
    // direction: regressor = xs (effect), target = ys (cause): the VARYING conditional
    let (cause, effect) = (&xs, &ys);
    let n = cause.len();
    let kc = KrrConfig::default();

    // common support
    let mut lo = f64::NEG_INFINITY; let mut hi = f64::INFINITY;
    for lev in 0..2usize {
        let mut vals: Vec<f64> = (0..n).filter(|&i| env[i]==lev).map(|i| cause[i]).collect();
        vals.sort_by(|a,b| a.total_cmp(b));
        let k = vals.len();
        lo = lo.max(vals[(k as f64 * 0.05) as usize]);
        hi = hi.min(vals[k-1-(k as f64*0.05) as usize]);
    }
    println!("support [{lo:.2}, {hi:.2}]");
    let in_support: Vec<bool> = (0..n).map(|i| cause[i] >= lo && cause[i] <= hi).collect();

    let map = feature_map(&[cause.as_slice()], &kc, 1);
    let mut preds = Vec::new(); let mut vars = Vec::new(); let mut wts: Vec<Vec<f64>> = Vec::new();
    for lev in 0..2usize {
        let rows: Vec<usize> = (0..n).filter(|&i| env[i]==lev).collect();
        let c: Vec<f64> = rows.iter().map(|&i| cause[i]).collect();
        let e: Vec<f64> = rows.iter().map(|&i| effect[i]).collect();
        let fit = krr_fit_on(map.clone(), &[&c], &e, &kc);
        let pred_all = fit.predict_cols(&[cause.as_slice()]);
        let sup_rows: Vec<usize> = rows.iter().copied().filter(|&i| in_support[i]).collect();
        let v = sup_rows.iter().map(|&i| (effect[i]-pred_all[i]).powi(2)).sum::<f64>() / sup_rows.len() as f64;
        let dof_scale = fit.train_rows as f64 / (fit.train_rows as f64 - fit.effective_dof).max(1.0);
        println!("env {lev}: support var {:.4} dof_scale {:.3} sup_rows {}", v, dof_scale, sup_rows.len());
        preds.push(pred_all); vars.push(v * dof_scale);
        // gaussian KDE weight
        let mean = c.iter().sum::<f64>()/c.len() as f64;
        let sd = (c.iter().map(|v|(v-mean)*(v-mean)).sum::<f64>()/c.len() as f64).sqrt();
        let bw = 0.9*sd*(c.len() as f64).powf(-0.2);
        let w: Vec<f64> = (0..n).map(|i| {
            let mut acc = 0.0;
            for &s in &c { let z = (cause[i]-s)/bw; acc += (-0.5*z*z).exp(); }
            0.5 * acc / (c.len() as f64 * bw * (2.0*std::f64::consts::PI).sqrt())
        }).collect();
        wts.push(w);
    }
    // decompose
    let mut acc_by_env = [0.0f64; 2]; let mut cnt = [0usize; 2];
    for i in 0..n {
        if !in_support[i] { continue; }
        let wsum = wts[0][i] + wts[1][i];
        let mut num = 0.0; let mut den = 0.0;
        for lev in 0..2 {
            let comp = gaussian_density(effect[i], preds[lev][i], vars[lev]);
            num += (wts[lev][i]/wsum) * comp;
            den += 0.5 * comp;
        }
        acc_by_env[env[i]] += (num.max(1e-12)/den.max(1e-12)).ln();
        cnt[env[i]] += 1;
    }
    println!("env0 pts {} mean log {:+.4}; env1 pts {} mean log {:+.4}; total {:+.4}",
        cnt[0], acc_by_env[0]/cnt[0] as f64, cnt[1], acc_by_env[1]/cnt[1] as f64,
        (acc_by_env[0]+acc_by_env[1])/(cnt[0]+cnt[1]) as f64);
}
