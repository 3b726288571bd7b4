use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use elastic_core::eval::{
    adv_error, build_prior, calibrate_pl, optimal_remap_with, user_priors, utility, GuessSet, Summary,
};
use elastic_core::mass::{compute_normalizers, privacy_mass};
use elastic_core::mech::{
    exponential_mechanism, exponential_row_from, planar_laplace_matrix, planar_laplace_sample, sample_index,
};
use elastic_core::metric::{audit_continuum, build_with_stats, BuildParams};
use elastic_core::{CellId, EpsilonConfig, FenceSet, GridSpec, Loss, MechanismMatrix, MetricGraph, PlanarPoint, Requirement};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::atomic::write_atomic;
use crate::cellsets::{read_fences, read_region};
use crate::checkins::load_checkins;
use crate::cli::{BuildArgs, Cli, Command, EvalArgs, Guesses, HeatmapArgs, MassArgs, Mechanism, Quantity, SampleArgs};
use crate::codec::{read_metric, write_metric};
use crate::config::PipelineConfig;
use crate::error::{GeoError, Result};
use crate::export::{write_audit, write_edges, write_matrix, write_raster};
use crate::gridfile::{grid_meta, read_grid};
use crate::keyvalue::meta_line;
use crate::massfile::{mass_meta, read_mass, write_mass};
use crate::quality::read_quality;

/// Bracket for planar Laplace calibration, in 1/m.
pub const EPSILON_BOUNDS: (f64, f64) = (1e-7, 1.0);

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = cli.common.resolve()?;
    match &cli.command {
        Command::Mass(a) => cmd_mass(&cfg, a),
        Command::Build(a) => cmd_build(&cfg, a),
        Command::Sample(a) => cmd_sample(&cfg, a),
        Command::Eval(a) => cmd_eval(&cfg, a),
        Command::Heatmap(a) => cmd_heatmap(&cfg, a),
    }
}

fn usage(msg: impl Into<String>) -> GeoError {
    GeoError::Usage(msg.into())
}

fn required<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| usage(format!("no {what} given (flag --{what} or `{what}` in the config)")))
}

pub fn cmd_mass(cfg: &PipelineConfig, a: &MassArgs) -> Result<()> {
    let grid = read_grid(required(&cfg.grid, "grid")?)?;
    let load = read_quality(required(&cfg.quality, "quality")?, &grid, &cfg.weights)?;
    let calibration = match &a.calibration {
        Some(p) => read_region(p, &grid)?,
        None => load.quality.default_calibration(),
    };
    let n = compute_normalizers(&load.quality, cfg.r_small, cfg.r_large, &calibration)?;
    let mg = privacy_mass(&load.quality, &n)?;
    let out = a.output.clone().unwrap_or_else(|| cfg.out("mass.csv"));
    write_mass(&out, &mg, &[mass_meta(&n, &load.weights), cfg.meta()])?;
    println!("cells {}", grid.len());
    println!("a {}", n.a);
    println!("b {}", n.b);
    println!("avg_q {}", n.avg_q);
    println!("wrote {}", out.display());
    Ok(())
}

fn params(cfg: &PipelineConfig) -> Result<BuildParams> {
    Ok(BuildParams::new(Requirement::new(cfg.l_star)?, cfg.l_top, cfg.frame_fraction)?)
}

pub fn cmd_build(cfg: &PipelineConfig, a: &BuildArgs) -> Result<()> {
    let mg = read_mass(&a.mass.clone().unwrap_or_else(|| cfg.out("mass.csv")))?;
    let grid = *mg.grid();
    let fences = match &cfg.fences {
        Some(p) => read_fences(p, &grid)?,
        None => FenceSet::empty(),
    };
    let params = params(cfg)?;
    let start = Instant::now();
    let (g, stats) = build_with_stats(&mg, &params, fences)?;
    let violations = audit_continuum(&g, &mg, &params.requirement)?;
    let elapsed = start.elapsed();

    let meta = vec![grid_meta(&grid), cfg.meta()];
    write_audit(&a.audit.clone().unwrap_or_else(|| cfg.out("audit.csv")), &violations, &meta)?;
    println!("iterations {}", stats.iterations);
    println!("edges {}", stats.edges);
    println!("fence_edges {}", stats.fence_edges);
    println!("usable {}", stats.usable);
    println!("stuck {}", stats.stuck);
    println!("frame_incomplete {}", stats.frame_incomplete);
    println!("violations {}", violations.len());
    println!("wall_time_s {:.3}", elapsed.as_secs_f64());
    if !violations.is_empty() {
        return Err(GeoError::Audit(violations.len()));
    }
    if stats.usable == 0 {
        eprintln!("warning: no usable cells; every input will be rejected unless fenced");
    }
    if stats.stuck > 0 {
        eprintln!("warning: {} cells ran out of candidates before meeting the requirement", stats.stuck);
    }
    let out = a.output.clone().unwrap_or_else(|| cfg.out("metric.elgm"));
    write_metric(&out, &g, &meta.join("\n"))?;
    if let Some(p) = &a.edges_csv {
        write_edges(p, &g, &meta)?;
    }
    println!("wrote {}", out.display());
    Ok(())
}

/// Rejects cells that cannot be used as a secret, with exit code 4.
pub fn check_secret(g: &MetricGraph, x: CellId) -> Result<()> {
    if g.is_valid_secret(x) {
        return Ok(());
    }
    let frame = g.params().frame_width(g.grid());
    let why = if g.grid().border_distance(x) < frame {
        "it lies in the frame band along the grid border"
    } else {
        "its privacy requirement could not be met"
    };
    Err(GeoError::IllegalSecret { cell: x, why })
}

fn input_point(grid: &GridSpec, a: &SampleArgs) -> Result<(CellId, PlanarPoint)> {
    if let (Some(lat), Some(lon)) = (a.lat, a.lon) {
        let p = grid.project(lat, lon)?;
        let c = grid.cell_of(p).ok_or_else(|| usage(format!("({lat}, {lon}) lies outside the grid")))?;
        return Ok((c, p));
    }
    let c = match (a.cell, a.col, a.row) {
        (Some(i), _, _) => CellId(i),
        (None, Some(col), Some(row)) => {
            grid.cell(col, row).ok_or_else(|| usage(format!("cell ({col}, {row}) lies outside the grid")))?
        }
        _ => return Err(usage("give the input as --cell, --col/--row or --lat/--lon")),
    };
    if !grid.contains(c) {
        return Err(usage(format!("cell {} lies outside a grid of {} cells", c.0, grid.len())));
    }
    Ok((c, grid.center(c)))
}

pub fn cmd_sample(cfg: &PipelineConfig, a: &SampleArgs) -> Result<()> {
    let metric = a.metric.clone().unwrap_or_else(|| cfg.out("metric.elgm"));
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    let mut lines: Vec<(f64, f64)> = Vec::with_capacity(a.count.min(1 << 20) as usize);
    match a.mechanism {
        Mechanism::Em => {
            let g = read_metric(&metric)?.graph;
            let grid = *g.grid();
            let (x, _) = input_point(&grid, a)?;
            check_secret(&g, x)?;
            let all: Vec<CellId> = grid.cells().collect();
            let row = exponential_row_from(&g.distances_from(x)?, x, &all)?;
            for _ in 0..a.count {
                let c = grid.unproject(grid.center(all[sample_index(&row, &mut rng)]));
                lines.push((c.lat, c.lon));
            }
        }
        Mechanism::Pl => {
            let grid = match &cfg.grid {
                Some(p) => read_grid(p)?,
                None => *read_metric(&metric)?.graph.grid(),
            };
            let eps = match (a.epsilon, a.r_star) {
                (Some(e), _) => EpsilonConfig::new(e)?,
                (None, Some(r)) => EpsilonConfig::from_radius(cfg.l_star, r)?,
                (None, None) => return Err(usage("planar Laplace needs --epsilon or --r-star")),
            };
            let (_, x) = input_point(&grid, a)?;
            for _ in 0..a.count {
                let c = grid.unproject(planar_laplace_sample(x, &eps, &mut rng));
                lines.push((c.lat, c.lon));
            }
        }
        Mechanism::Identity => return Err(usage("sampling supports the em and pl mechanisms")),
    }
    let fill = |w: &mut dyn Write| -> std::io::Result<()> {
        writeln!(w, "lat,lon")?;
        for (lat, lon) in &lines {
            writeln!(w, "{lat},{lon}")?;
        }
        Ok(())
    };
    match &a.output {
        Some(p) => write_atomic(p, fill),
        None => fill(&mut std::io::stdout().lock()).map_err(|e| GeoError::io("<stdout>", e)),
    }
}

pub fn parse_loss(s: &str) -> Result<Loss> {
    match s.trim() {
        "binary" => Ok(Loss::Binary),
        "euclidean" => Ok(Loss::Euclidean),
        t => match t.strip_prefix("threshold:").map(str::parse::<f64>) {
            Some(Ok(r)) => Ok(Loss::threshold(r)?),
            _ => Err(usage(format!("unknown loss `{t}`; expected binary, euclidean or threshold:<meters>"))),
        },
    }
}

fn loss_name(l: &Loss) -> String {
    match l {
        Loss::Binary => "binary".into(),
        Loss::Euclidean => "euclidean".into(),
        Loss::Threshold(r) => format!("threshold_{r}"),
    }
}

fn mechanism_name(m: Mechanism) -> &'static str {
    match m {
        Mechanism::Em => "em",
        Mechanism::Pl => "pl",
        Mechanism::Identity => "identity",
    }
}

pub fn cmd_eval(cfg: &PipelineConfig, a: &EvalArgs) -> Result<()> {
    let g = read_metric(&a.metric.clone().unwrap_or_else(|| cfg.out("metric.elgm")))?.graph;
    let grid = *g.grid();
    let losses: Vec<Loss> = a.loss.iter().map(|s| parse_loss(s)).collect::<Result<_>>()?;
    let listed = read_region(&a.region, &grid)?;
    let region: Vec<CellId> = listed.iter().copied().filter(|&c| g.is_valid_secret(c)).collect();
    if region.len() < listed.len() {
        eprintln!("warning: {} region cells are not valid secrets and were dropped", listed.len() - region.len());
    }
    if region.is_empty() {
        return Err(GeoError::EmptyRegion);
    }
    let load = load_checkins(&a.checkins)?;
    let global = build_prior(&load.records, &grid, &region)?;
    let users = user_priors(&load.records, &grid, &region, a.min_checkins)?;
    let all: Vec<CellId> = grid.cells().collect();
    let guesses = match a.guesses {
        Guesses::Support => GuessSet::Support,
        Guesses::All => GuessSet::AllCells,
    };

    let pl_wants_em = a.mechanisms.contains(&Mechanism::Pl)
        && a.pl_epsilon.is_none()
        && matches!(a.pl_target.as_deref(), None | Some("em"));
    let em = if a.mechanisms.contains(&Mechanism::Em) || pl_wants_em || a.matrix_csv.is_some() {
        Some(exponential_mechanism(&g, &region, &all)?)
    } else {
        None
    };
    let mut pl_note: Vec<(&str, String)> = Vec::new();
    let mut mechs: Vec<(Mechanism, MechanismMatrix)> = Vec::new();
    for &m in &a.mechanisms {
        if mechs.iter().any(|(seen, _)| *seen == m) {
            continue;
        }
        let k = match m {
            Mechanism::Em => em.clone().expect("computed above"),
            Mechanism::Identity => MechanismMatrix::identity(grid, region.clone())?,
            Mechanism::Pl => {
                let eps = match (a.pl_epsilon, a.pl_target.as_deref()) {
                    (Some(e), _) => EpsilonConfig::new(e)?,
                    (None, t) => {
                        let target = match t {
                            None | Some("em") => utility(em.as_ref().expect("computed above"), &global, &Loss::Euclidean)?,
                            Some(v) => v.parse().map_err(|_| usage(format!("--pl-target must be a number or `em`, got `{v}`")))?,
                        };
                        pl_note.push(("target", target.to_string()));
                        calibrate_pl(target, &global, &grid, &Loss::Euclidean, EPSILON_BOUNDS)?
                    }
                };
                pl_note.push(("epsilon", eps.epsilon().to_string()));
                println!("pl_epsilon {}", eps.epsilon());
                planar_laplace_matrix(&grid, &eps, &region, &all)?
            }
        };
        mechs.push((m, k));
    }

    let mut meta = vec![grid_meta(&grid), cfg.meta()];
    let mut notes = vec![
        ("region_cells", region.len().to_string()),
        ("checkins", load.records.len().to_string()),
        ("malformed", load.malformed.len().to_string()),
        ("users", users.len().to_string()),
    ];
    notes.extend(pl_note.iter().map(|(k, v)| (*k, v.clone())));
    meta.push(meta_line("eval", &notes));

    if let (Some(p), Some(k)) = (&a.matrix_csv, &em) {
        write_matrix(p, k, &meta)?;
    }

    let mut summary: Vec<String> = Vec::new();
    for (m, k) in &mechs {
        for loss in &losses {
            let h = optimal_remap_with(k, &global, loss, guesses)?;
            let global_err = adv_error(k, &global, &h, loss)?;
            let util = utility(k, &global, loss)?;
            let per_user: Vec<f64> = users.iter().map(|u| adv_error(k, &u.prior, &h, loss)).collect::<elastic_core::Result<_>>()?;
            let name = format!("users_{}_{}.csv", mechanism_name(*m), loss_name(loss));
            write_atomic(&cfg.out(&name), |w| {
                for l in &meta {
                    writeln!(w, "{l}")?;
                }
                writeln!(w, "user,n_checkins,adv_error")?;
                for (u, e) in users.iter().zip(&per_user) {
                    writeln!(w, "{},{},{e}", u.user, u.checkins)?;
                }
                Ok(())
            })?;
            let stats = match Summary::of(&per_user) {
                Some(s) => format!("{},{},{},{},{},{},{}", s.count, s.min, s.q1, s.median, s.q3, s.max, s.mean),
                None => "0,,,,,,".into(),
            };
            println!("{} {} adv_error {global_err} utility {util}", mechanism_name(*m), loss_name(loss));
            summary.push(format!("{},{},{global_err},{util},{stats}", mechanism_name(*m), loss_name(loss)));
        }
    }
    write_atomic(&cfg.out("summary.csv"), |w| {
        for l in &meta {
            writeln!(w, "{l}")?;
        }
        writeln!(w, "mechanism,loss,adv_error,utility,users,min,q1,median,q3,max,mean")?;
        for s in &summary {
            writeln!(w, "{s}")?;
        }
        Ok(())
    })?;
    if !load.malformed.is_empty() {
        eprintln!("skipped {} malformed check-in lines (first at line {})", load.malformed.len(), load.malformed[0].line);
    }
    Ok(())
}

/// Expected Euclidean error of the exponential mechanism at every valid
/// secret, over all cells as reports.
pub fn expected_error_raster(g: &MetricGraph) -> Result<Vec<Option<f64>>> {
    let grid = g.grid();
    let all: Vec<CellId> = grid.cells().collect();
    let mut out = Vec::with_capacity(all.len());
    for &x in &all {
        if !g.is_valid_secret(x) {
            out.push(None);
            continue;
        }
        let row = exponential_row_from(&g.distances_from(x)?, x, &all)?;
        let mut e = 0.0;
        for (&z, &p) in all.iter().zip(&row) {
            if p > 0.0 {
                e += p * grid.euclidean(x, z)?;
            }
        }
        out.push(Some(e));
    }
    Ok(out)
}

pub fn cmd_heatmap(cfg: &PipelineConfig, a: &HeatmapArgs) -> Result<()> {
    let metric = || read_metric(&a.metric.clone().unwrap_or_else(|| cfg.out("metric.elgm"))).map(|m| m.graph);
    let (grid, values) = match a.quantity {
        Quantity::Mass => {
            let mg = read_mass(&a.mass.clone().unwrap_or_else(|| cfg.out("mass.csv")))?;
            (*mg.grid(), mg.values().iter().map(|&v| Some(v)).collect())
        }
        Quantity::ExpectedError => {
            let g = metric()?;
            (*g.grid(), expected_error_raster(&g)?)
        }
        Quantity::LReach => {
            let g = metric()?;
            (*g.grid(), g.levels().iter().map(|&v| Some(v)).collect())
        }
    };
    let name = match a.quantity {
        Quantity::Mass => "mass",
        Quantity::ExpectedError => "expected_error",
        Quantity::LReach => "l_reach",
    };
    let meta = vec![grid_meta(&grid), cfg.meta(), meta_line("heatmap", &[("quantity", name.into())])];
    match &a.output {
        Some(p) => write_atomic(p, |w| write_raster(w, &grid, &values, &meta)),
        None => write_raster(&mut std::io::stdout().lock(), &grid, &values, &meta).map_err(|e| GeoError::io("<stdout>", e)),
    }
}
