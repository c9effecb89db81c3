//! Sandboxed pipeline interpreter.
//!
//! Execution is a pure function of (pipeline, input, budget). Every failure is
//! reported in the returned outcome; nothing panics past the sandbox. Output
//! dimensions are checked before any cell is materialized, so resource errors
//! fire without allocating oversized intermediates.

use super::{lookup, parse, ErrorKind, ExecError, Pipeline, Stage};
use crate::grid::{Grid, MAX_SIDE, NUM_COLORS};

/// Sandbox bounds for a single execution.
#[derive(Debug, Clone, Copy)]
pub struct Budget {
    /// Maximum pipeline length.
    pub max_stages: usize,
    /// Maximum side length of any intermediate grid.
    pub max_side: usize,
    /// Total cell reads+writes allowed per execution.
    pub max_cell_ops: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_stages: 16, max_side: MAX_SIDE, max_cell_ops: 50_000 }
    }
}

/// Parse and execute in one step; parse failures fold into the outcome as
/// syntax-kind errors.
pub fn run_source(source: &str, input: &Grid, budget: &Budget) -> Result<Grid, ExecError> {
    let pipeline = parse(source).map_err(|e| ExecError {
        kind: ErrorKind::Syntax,
        message: e.message,
        offset: e.offset,
    })?;
    execute(&pipeline, input, budget)
}

/// Apply the stages left to right. Static validation (known primitives,
/// arities, stage count) runs before any stage executes.
pub fn execute(pipeline: &Pipeline, input: &Grid, budget: &Budget) -> Result<Grid, ExecError> {
    for stage in &pipeline.stages {
        let prim = lookup(&stage.name).ok_or_else(|| ExecError {
            kind: ErrorKind::Syntax,
            message: format!("unknown primitive '{}'", stage.name),
            offset: stage.offset,
        })?;
        if stage.args.len() != prim.arity() {
            return Err(ExecError {
                kind: ErrorKind::Arity,
                message: format!(
                    "{} expects {} arguments, got {}",
                    prim.name,
                    prim.arity(),
                    stage.args.len()
                ),
                offset: stage.offset,
            });
        }
    }
    if pipeline.stages.len() > budget.max_stages {
        return Err(ExecError {
            kind: ErrorKind::Resource,
            message: format!("pipeline has {} stages, limit {}", pipeline.stages.len(), budget.max_stages),
            offset: pipeline.stages[budget.max_stages].offset,
        });
    }

    let mut grid = input.clone();
    let mut cell_ops = 0usize;
    for stage in &pipeline.stages {
        let out = apply_stage(stage, &grid, budget)?;
        cell_ops += grid.area() + out.area();
        if cell_ops > budget.max_cell_ops {
            return Err(ExecError {
                kind: ErrorKind::Resource,
                message: format!("cell-op budget exceeded ({} > {})", cell_ops, budget.max_cell_ops),
                offset: stage.offset,
            });
        }
        grid = out;
    }
    Ok(grid)
}

fn runtime(stage: &Stage, message: String) -> ExecError {
    ExecError { kind: ErrorKind::Runtime, message, offset: stage.offset }
}

fn resource(stage: &Stage, message: String) -> ExecError {
    ExecError { kind: ErrorKind::Resource, message, offset: stage.offset }
}

fn color_arg(stage: &Stage, idx: usize) -> Result<u8, ExecError> {
    let v = stage.args[idx];
    if !(0..NUM_COLORS as i64).contains(&v) {
        return Err(runtime(stage, format!("{}: color argument {} out of range 0..9", stage.name, v)));
    }
    Ok(v as u8)
}

/// Check prospective output dimensions against the sandbox before building.
fn check_dims(stage: &Stage, budget: &Budget, h: i64, w: i64) -> Result<(usize, usize), ExecError> {
    if h < 1 || w < 1 {
        return Err(runtime(stage, format!("{}: output grid would be empty", stage.name)));
    }
    let side = budget.max_side as i64;
    if h > side || w > side {
        return Err(resource(
            stage,
            format!("{}: output {}x{} exceeds {}x{}", stage.name, h, w, side, side),
        ));
    }
    Ok((h as usize, w as usize))
}

fn build(h: usize, w: usize, f: impl Fn(usize, usize) -> u8) -> Grid {
    let mut cells = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            cells.push(f(r, c));
        }
    }
    Grid::from_cells(h, w, cells).expect("builder produced invalid grid")
}

fn modal_color(g: &Grid) -> u8 {
    let mut counts = [0usize; NUM_COLORS];
    for &c in g.cells() {
        counts[c as usize] += 1;
    }
    // Ties break toward the smallest color.
    let mut best = 0u8;
    for c in 1..NUM_COLORS {
        if counts[c] > counts[best as usize] {
            best = c as u8;
        }
    }
    best
}

fn apply_stage(stage: &Stage, g: &Grid, budget: &Budget) -> Result<Grid, ExecError> {
    let (h, w) = (g.height(), g.width());
    match stage.name.as_str() {
        "identity" => Ok(g.clone()),
        "rot90" => Ok(build(w, h, |r, c| g.get(h - 1 - c, r))),
        "rot180" => Ok(build(h, w, |r, c| g.get(h - 1 - r, w - 1 - c))),
        "rot270" => Ok(build(w, h, |r, c| g.get(c, w - 1 - r))),
        "mirror_h" => Ok(build(h, w, |r, c| g.get(r, w - 1 - c))),
        "mirror_v" => Ok(build(h, w, |r, c| g.get(h - 1 - r, c))),
        "transpose" => Ok(build(w, h, |r, c| g.get(c, r))),
        "replace" => {
            let from = color_arg(stage, 0)?;
            let to = color_arg(stage, 1)?;
            Ok(build(h, w, |r, c| if g.get(r, c) == from { to } else { g.get(r, c) }))
        }
        "fill" => {
            let color = color_arg(stage, 0)?;
            Ok(build(h, w, |_, _| color))
        }
        "palette_swap" => {
            let a = color_arg(stage, 0)?;
            let b = color_arg(stage, 1)?;
            Ok(build(h, w, |r, c| {
                let v = g.get(r, c);
                if v == a {
                    b
                } else if v == b {
                    a
                } else {
                    v
                }
            }))
        }
        "most_color_fill" => {
            let color = modal_color(g);
            Ok(build(h, w, |_, _| color))
        }
        "crop" => {
            let [r0, c0, ch, cw] = stage.args[..] else { unreachable!() };
            if r0 < 0 || c0 < 0 {
                return Err(runtime(stage, "crop: negative corner".to_string()));
            }
            if ch < 1 || cw < 1 {
                return Err(runtime(stage, "crop: window must be at least 1x1".to_string()));
            }
            if r0 + ch > h as i64 || c0 + cw > w as i64 {
                return Err(runtime(
                    stage,
                    format!("crop: window {r0},{c0} {ch}x{cw} outside {h}x{w} grid"),
                ));
            }
            let (oh, ow) = (ch as usize, cw as usize);
            let (r0, c0) = (r0 as usize, c0 as usize);
            Ok(build(oh, ow, |r, c| g.get(r0 + r, c0 + c)))
        }
        "pad" => {
            let [t, b, l, r] = stage.args[..4] else { unreachable!() };
            let color = color_arg(stage, 4)?;
            if t < 0 || b < 0 || l < 0 || r < 0 {
                return Err(runtime(stage, "pad: negative padding".to_string()));
            }
            let (oh, ow) = check_dims(stage, budget, h as i64 + t + b, w as i64 + l + r)?;
            let (t, l) = (t as usize, l as usize);
            Ok(build(oh, ow, |rr, cc| {
                if rr >= t && rr < t + h && cc >= l && cc < l + w {
                    g.get(rr - t, cc - l)
                } else {
                    color
                }
            }))
        }
        "translate" => {
            let [dr, dc] = stage.args[..2] else { unreachable!() };
            let color = color_arg(stage, 2)?;
            Ok(build(h, w, |r, c| {
                let sr = r as i64 - dr;
                let sc = c as i64 - dc;
                if sr >= 0 && sr < h as i64 && sc >= 0 && sc < w as i64 {
                    g.get(sr as usize, sc as usize)
                } else {
                    color
                }
            }))
        }
        "upscale" => {
            let k = stage.args[0];
            if k < 1 {
                return Err(runtime(stage, format!("upscale: factor {k} must be at least 1")));
            }
            let (oh, ow) = check_dims(stage, budget, (h as i64).saturating_mul(k), (w as i64).saturating_mul(k))?;
            let k = k as usize;
            Ok(build(oh, ow, |r, c| g.get(r / k, c / k)))
        }
        "downscale" => {
            let k = stage.args[0];
            if k < 1 {
                return Err(runtime(stage, format!("downscale: factor {k} must be at least 1")));
            }
            let k = k as usize;
            if k > h || k > w || h % k != 0 || w % k != 0 {
                return Err(runtime(
                    stage,
                    format!("downscale: {h}x{w} not divisible by {k}"),
                ));
            }
            let (oh, ow) = (h / k, w / k);
            Ok(build(oh, ow, |r, c| {
                let mut counts = [0usize; NUM_COLORS];
                for br in 0..k {
                    for bc in 0..k {
                        counts[g.get(r * k + br, c * k + bc) as usize] += 1;
                    }
                }
                let mut best = 0u8;
                for col in 1..NUM_COLORS {
                    if counts[col] > counts[best as usize] {
                        best = col as u8;
                    }
                }
                best
            }))
        }
        "tile" => {
            let [m, n] = stage.args[..] else { unreachable!() };
            if m < 1 || n < 1 {
                return Err(runtime(stage, "tile: repeat counts must be at least 1".to_string()));
            }
            let (oh, ow) = check_dims(stage, budget, (h as i64).saturating_mul(m), (w as i64).saturating_mul(n))?;
            Ok(build(oh, ow, |r, c| g.get(r % h, c % w)))
        }
        "border" => {
            let color = color_arg(stage, 0)?;
            Ok(build(h, w, |r, c| {
                if r == 0 || c == 0 || r == h - 1 || c == w - 1 {
                    color
                } else {
                    g.get(r, c)
                }
            }))
        }
        other => unreachable!("validated primitive '{other}' has no implementation"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(rows: &[&[i64]]) -> Grid {
        Grid::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn run(src: &str, input: &Grid) -> Result<Grid, ExecError> {
        run_source(src, input, &Budget::default())
    }

    #[test]
    fn identity_returns_input() {
        let grid = g(&[&[1, 2], &[3, 4]]);
        assert_eq!(run("identity", &grid).unwrap(), grid);
    }

    #[test]
    fn rot90_clockwise() {
        // [[1,2],[3,4]] -> [[3,1],[4,2]]
        let grid = g(&[&[1, 2], &[3, 4]]);
        assert_eq!(run("rot90", &grid).unwrap(), g(&[&[3, 1], &[4, 2]]));
    }

    #[test]
    fn rotations_compose() {
        let grid = g(&[&[1, 2, 3], &[4, 5, 6]]);
        assert_eq!(run("rot90 |> rot90", &grid).unwrap(), run("rot180", &grid).unwrap());
        assert_eq!(run("rot90 |> rot270", &grid).unwrap(), grid);
    }

    #[test]
    fn mirrors() {
        let grid = g(&[&[1, 2], &[3, 4]]);
        assert_eq!(run("mirror_h", &grid).unwrap(), g(&[&[2, 1], &[4, 3]]));
        assert_eq!(run("mirror_v", &grid).unwrap(), g(&[&[3, 4], &[1, 2]]));
        assert_eq!(run("transpose", &grid).unwrap(), g(&[&[1, 3], &[2, 4]]));
    }

    #[test]
    fn recoloring() {
        let grid = g(&[&[3, 0], &[3, 4]]);
        assert_eq!(run("replace(3,4)", &grid).unwrap(), g(&[&[4, 0], &[4, 4]]));
        assert_eq!(run("palette_swap(3,4)", &grid).unwrap(), g(&[&[4, 0], &[4, 3]]));
        assert_eq!(run("fill(7)", &grid).unwrap(), g(&[&[7, 7], &[7, 7]]));
        assert_eq!(run("most_color_fill", &grid).unwrap(), g(&[&[3, 3], &[3, 3]]));
    }

    #[test]
    fn modal_tie_breaks_to_smallest() {
        let grid = g(&[&[5, 2], &[2, 5]]);
        assert_eq!(run("most_color_fill", &grid).unwrap(), g(&[&[2, 2], &[2, 2]]));
    }

    #[test]
    fn crop_and_pad() {
        let grid = g(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 9]]);
        assert_eq!(run("crop(0,1,2,2)", &grid).unwrap(), g(&[&[2, 3], &[5, 6]]));
        let padded = run("pad(1,0,0,1,0)", &g(&[&[5]])).unwrap();
        assert_eq!(padded, g(&[&[0, 0], &[5, 0]]));
    }

    #[test]
    fn crop_outside_bounds_is_runtime() {
        let grid = g(&[&[1, 2], &[3, 4]]);
        let e = run("crop(1,1,2,2)", &grid).unwrap_err();
        assert_eq!(e.kind, ErrorKind::Runtime);
        assert!(e.message.starts_with("crop:"));
    }

    #[test]
    fn translate_drops_and_fills() {
        let grid = g(&[&[1, 2], &[3, 4]]);
        assert_eq!(run("translate(1,0,0)", &grid).unwrap(), g(&[&[0, 0], &[1, 2]]));
        assert_eq!(run("translate(0,-1,9)", &grid).unwrap(), g(&[&[2, 9], &[4, 9]]));
    }

    #[test]
    fn upscale_replicates() {
        let grid = g(&[&[1, 2]]);
        assert_eq!(run("upscale(2)", &grid).unwrap(), g(&[&[1, 1, 2, 2], &[1, 1, 2, 2]]));
    }

    #[test]
    fn upscale_past_limit_is_resource() {
        let rows: Vec<Vec<i64>> = (0..16).map(|_| vec![1; 16]).collect();
        let grid = Grid::from_rows(&rows).unwrap();
        let e = run("upscale(2)", &grid).unwrap_err();
        assert_eq!(e.kind, ErrorKind::Resource);
    }

    #[test]
    fn downscale_majority() {
        let grid = g(&[&[1, 1, 2, 2], &[1, 5, 2, 2]]);
        assert_eq!(run("downscale(2)", &grid).unwrap(), g(&[&[1, 2]]));
        let e = run("downscale(3)", &grid).unwrap_err();
        assert_eq!(e.kind, ErrorKind::Runtime);
    }

    #[test]
    fn upscale_then_downscale_is_identity() {
        let grid = g(&[&[1, 2], &[3, 4]]);
        assert_eq!(run("upscale(3) |> downscale(3)", &grid).unwrap(), grid);
    }

    #[test]
    fn tile_and_border() {
        assert_eq!(run("tile(2,2)", &g(&[&[1]])).unwrap(), g(&[&[1, 1], &[1, 1]]));
        assert_eq!(
            run("border(9)", &g(&[&[1, 1, 1], &[1, 5, 1], &[1, 1, 1]])).unwrap(),
            g(&[&[9, 9, 9], &[9, 5, 9], &[9, 9, 9]])
        );
        assert_eq!(run("border(9)", &g(&[&[1]])).unwrap(), g(&[&[9]]));
    }

    #[test]
    fn color_argument_out_of_range() {
        let e = run("replace(12,1)", &g(&[&[1]])).unwrap_err();
        assert_eq!(e.kind, ErrorKind::Runtime);
        assert_eq!(e.message, "replace: color argument 12 out of range 0..9");
    }

    #[test]
    fn unknown_primitive_is_syntax_kind() {
        let e = run("rot90 |> warp", &g(&[&[1]])).unwrap_err();
        assert_eq!(e.kind, ErrorKind::Syntax);
        assert_eq!(e.message, "unknown primitive 'warp'");
        assert_eq!(e.offset, 9);
        assert!(e.is_static());
    }

    #[test]
    fn wrong_arity() {
        let e = run("mirror_h(1)", &g(&[&[1]])).unwrap_err();
        assert_eq!(e.kind, ErrorKind::Arity);
        assert_eq!(e.message, "mirror_h expects 0 arguments, got 1");
        assert!(e.is_static());
    }

    #[test]
    fn parse_error_folds_into_outcome() {
        let e = run("replace(3", &g(&[&[1]])).unwrap_err();
        assert_eq!(e.kind, ErrorKind::Syntax);
        assert_eq!(e.offset, 9);
        assert_eq!(e.message, "expected ',' or ')'");
    }

    #[test]
    fn stage_count_limit() {
        let src = vec!["identity"; 17].join(" |> ");
        let e = run(&src, &g(&[&[1]])).unwrap_err();
        assert_eq!(e.kind, ErrorKind::Resource);
    }

    #[test]
    fn cell_op_budget() {
        // 30x30 grids cost 1800 ops per identity stage; 16 stages fit inside
        // the default budget, a tighter budget trips.
        let rows: Vec<Vec<i64>> = (0..30).map(|_| vec![1; 30]).collect();
        let grid = Grid::from_rows(&rows).unwrap();
        let src = vec!["identity"; 16].join(" |> ");
        assert!(run(&src, &grid).is_ok());
        let tight = Budget { max_cell_ops: 1000, ..Budget::default() };
        let e = run_source(&src, &grid, &tight).unwrap_err();
        assert_eq!(e.kind, ErrorKind::Resource);
    }
}
