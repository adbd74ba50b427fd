use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{label_signs, solve_dual, sq_distances, SvmConfig, Standardizer};
use crate::error::{Error, Result};
use crate::label::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmGrid {
    pub c_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
}

impl Default for SvmGrid {
    /// C ∈ {2⁻², …, 2⁶}, γ ∈ {2⁻⁸, …, 2²}.
    fn default() -> Self {
        SvmGrid {
            c_values: (-2..=6).map(|e| 2f64.powi(e)).collect(),
            gamma_values: (-8..=2).map(|e| 2f64.powi(e)).collect(),
        }
    }
}

impl SvmGrid {
    pub fn single(c: f64, gamma: f64) -> Self {
        SvmGrid {
            c_values: vec![c],
            gamma_values: vec![gamma],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub c: f64,
    pub gamma: f64,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: SvmConfig,
    pub best_accuracy: f64,
    /// Row-major over (C, γ), both ascending as given in the grid.
    pub cells: Vec<GridCell>,
}

impl GridSearchResult {
    pub fn to_csv(&self) -> String {
        let folds = self.cells.first().map_or(0, |c| c.fold_accuracies.len());
        let mut out = String::from("c,gamma,mean_accuracy");
        for k in 1..=folds {
            out.push_str(&format!(",fold{k}"));
        }
        out.push('\n');
        for cell in &self.cells {
            out.push_str(&format!("{},{},{:.6}", cell.c, cell.gamma, cell.mean_accuracy));
            for a in &cell.fold_accuracies {
                out.push_str(&format!(",{a:.6}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Fold index per example: each class is shuffled with `seed` and dealt
/// round-robin, so every fold gets ⌊n_c/k⌋ or ⌈n_c/k⌉ of class c.
pub fn stratified_folds(labels: &[Label], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::invalid("cross-validation needs at least two folds"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; labels.len()];
    for class in Label::ALL {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < folds {
            return Err(Error::invalid(format!(
                "class {class} has {} examples, fewer than {folds} folds",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        for (k, i) in idx.into_iter().enumerate() {
            assignment[i] = k % folds;
        }
    }
    Ok(assignment)
}

/// Picks (C, γ) by mean accuracy over stratified folds; ties go to the
/// smaller C, then the smaller γ. Each fold is standardized on its own
/// training part. `base` supplies tolerance, pass limit and seed.
pub fn grid_search_cv(
    x: &Array2<f64>,
    labels: &[Label],
    grid: &SvmGrid,
    folds: usize,
    base: &SvmConfig,
) -> Result<GridSearchResult> {
    if x.nrows() != labels.len() {
        return Err(Error::invalid(format!("{} rows but {} labels", x.nrows(), labels.len())));
    }
    if grid.c_values.is_empty() || grid.gamma_values.is_empty() {
        return Err(Error::invalid("empty grid"));
    }
    for &c in &grid.c_values {
        for &gamma in &grid.gamma_values {
            SvmConfig { c, gamma, ..*base }.validate()?;
        }
    }
    let assignment = stratified_folds(labels, folds, base.seed)?;
    let mut c_sorted = grid.c_values.clone();
    c_sorted.sort_by(f64::total_cmp);
    let mut g_sorted = grid.gamma_values.clone();
    g_sorted.sort_by(f64::total_cmp);

    // accuracy[c][g][fold]
    let mut acc = vec![vec![vec![0.0; folds]; g_sorted.len()]; c_sorted.len()];
    #[allow(clippy::needless_range_loop)]
    for fold in 0..folds {
        let train: Vec<usize> = (0..labels.len()).filter(|&i| assignment[i] != fold).collect();
        let test: Vec<usize> = (0..labels.len()).filter(|&i| assignment[i] == fold).collect();
        let xs = x.select(Axis(0), &train);
        let st = Standardizer::fit(&xs)?;
        let z_train = st.apply(&xs)?;
        let z_test = st.apply(&x.select(Axis(0), &test))?;
        let d_train = sq_distances(&z_train, &z_train);
        let d_test = sq_distances(&z_test, &z_train);
        let y_train = label_signs(&train.iter().map(|&i| labels[i]).collect::<Vec<_>>());

        for (gi, &gamma) in g_sorted.iter().enumerate() {
            let k_train = d_train.mapv(|d| (-gamma * d).exp());
            let k_test = d_test.mapv(|d| (-gamma * d).exp());
            for (ci, &c) in c_sorted.iter().enumerate() {
                let cfg = SvmConfig { c, gamma, ..*base };
                let sol = solve_dual(&k_train, &y_train, c, cfg.tolerance, cfg.max_iterations(train.len()), cfg.seed);
                let correct = test
                    .iter()
                    .enumerate()
                    .filter(|&(r, &i)| {
                        let f: f64 = k_test
                            .row(r)
                            .iter()
                            .zip(&sol.alphas)
                            .zip(&y_train)
                            .map(|((k, a), y)| k * a * y)
                            .sum::<f64>()
                            + sol.bias;
                        Label::from_decision(f) == labels[i]
                    })
                    .count();
                acc[ci][gi][fold] = correct as f64 / test.len() as f64;
            }
        }
    }

    let mut cells = Vec::new();
    let mut best: Option<(f64, f64, f64)> = None;
    for (ci, &c) in c_sorted.iter().enumerate() {
        for (gi, &gamma) in g_sorted.iter().enumerate() {
            let fold_accuracies = acc[ci][gi].clone();
            let mean_accuracy = fold_accuracies.iter().sum::<f64>() / folds as f64;
            if best.is_none_or(|(b, _, _)| mean_accuracy > b) {
                best = Some((mean_accuracy, c, gamma));
            }
            cells.push(GridCell {
                c,
                gamma,
                fold_accuracies,
                mean_accuracy,
            });
        }
    }
    let (best_accuracy, c, gamma) = best.expect("non-empty grid");
    Ok(GridSearchResult {
        best: SvmConfig { c, gamma, ..*base },
        best_accuracy,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy() -> (Array2<f64>, Vec<Label>) {
        // two well separated blobs of 6 points each
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..6 {
            let t = i as f64 * 0.1;
            rows.extend([t, 0.2 - t]);
            labels.push(Label::False);
            rows.extend([3.0 + t, 3.1 - t]);
            labels.push(Label::True);
        }
        (Array2::from_shape_vec((12, 2), rows).unwrap(), labels)
    }

    #[test]
    fn folds_are_stratified() {
        let labels: Vec<Label> = (0..23).map(|i| if i % 3 == 0 { Label::True } else { Label::False }).collect();
        let a = stratified_folds(&labels, 5, 1).unwrap();
        for f in 0..5 {
            let n_true = (0..23).filter(|&i| a[i] == f && labels[i] == Label::True).count();
            assert!((1..=2).contains(&n_true));
        }
        assert_eq!(a, stratified_folds(&labels, 5, 1).unwrap());
        assert!(stratified_folds(&labels[..6], 5, 1).is_err());
    }

    #[test]
    fn single_cell_and_separable_winner() {
        let (x, y) = toy();
        let r = grid_search_cv(&x, &y, &SvmGrid::single(2.0, 0.5), 3, &SvmConfig::default()).unwrap();
        assert_eq!((r.best.c, r.best.gamma), (2.0, 0.5));
        assert_eq!(r.cells.len(), 1);
        assert_eq!(r.best_accuracy, 1.0);

        let grid = SvmGrid {
            c_values: vec![4.0, 0.25],
            gamma_values: vec![1.0, 0.5],
        };
        let r = grid_search_cv(&x, &y, &grid, 3, &SvmConfig::default()).unwrap();
        // every cell separates the blobs, so the tie rule picks the smallest C and γ
        assert!(r.cells.iter().all(|c| c.mean_accuracy == 1.0));
        assert_eq!((r.best.c, r.best.gamma), (0.25, 0.5));
        assert!(r.to_csv().starts_with("c,gamma,mean_accuracy,fold1,fold2,fold3\n0.25,0.5,1.000000"));
    }

    #[test]
    fn narrow_kernel_wins_on_interleaved_pattern() {
        // a narrow kernel can fit the interleaved pattern; a wide one cannot
        let x = array![[0.0], [1.0], [2.0], [3.0], [4.0], [5.0], [6.0], [7.0], [8.0], [9.0], [10.0], [11.0]];
        let y: Vec<Label> = (0..12).map(|i| if (i / 2) % 2 == 0 { Label::False } else { Label::True }).collect();
        let x2 = ndarray::concatenate![Axis(0), x, x.mapv(|v| v + 0.05)];
        let y2: Vec<Label> = y.iter().chain(&y).copied().collect();
        let grid = SvmGrid {
            c_values: vec![64.0],
            gamma_values: vec![0.01, 64.0],
        };
        let r = grid_search_cv(&x2, &y2, &grid, 2, &SvmConfig::default()).unwrap();
        assert_eq!(r.best.gamma, 64.0);
        assert!(r.best_accuracy > r.cells[0].mean_accuracy);
    }
}
