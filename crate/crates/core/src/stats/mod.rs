//! The statistical battery: Kruskal–Wallis omnibus, Conover–Iman pairwise
//! tests with Holm correction, Cliff's delta, Levene's test, one-way ANOVA
//! and the pooled two-sample t-test.
//!
//! Conventions: midranks for ties, tie-corrected H, two-sided p-values,
//! Holm step-down exactly as published. Post-hoc tests run only when the
//! omnibus is significant at the chosen alpha.

pub mod special;

use thiserror::Error;

use crate::num::{mean, median, Real};
use special::{chi2_sf, f_sf, t_two_sided};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("groups must be non-empty")]
    EmptyGroup,
}

/// Per-group observations, ordered by group label for deterministic output.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedSample<S> {
    groups: Vec<(String, Vec<S>)>,
}

impl<S: Real> GroupedSample<S> {
    pub fn new(groups: impl IntoIterator<Item = (String, Vec<S>)>) -> Result<Self, StatsError> {
        let mut groups: Vec<(String, Vec<S>)> = groups.into_iter().collect();
        groups.sort_by(|a, b| a.0.cmp(&b.0));
        for (label, values) in &groups {
            if values.is_empty() {
                return Err(StatsError::DegenerateInput(format!(
                    "group '{label}' is empty"
                )));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(StatsError::DegenerateInput(format!(
                    "group '{label}' contains non-finite values"
                )));
            }
        }
        Ok(Self { groups })
    }

    pub fn labels(&self) -> Vec<&str> {
        self.groups.iter().map(|(l, _)| l.as_str()).collect()
    }

    pub fn groups(&self) -> &[(String, Vec<S>)] {
        &self.groups
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn total_len(&self) -> usize {
        self.groups.iter().map(|(_, v)| v.len()).sum()
    }

    fn require_groups(&self, k: usize) -> Result<(), StatsError> {
        if self.group_count() < k {
            return Err(StatsError::DegenerateInput(format!(
                "need at least {k} groups, got {}",
                self.group_count()
            )));
        }
        Ok(())
    }

    fn require_min_group_size(&self, n: usize) -> Result<(), StatsError> {
        for (label, values) in &self.groups {
            if values.len() < n {
                return Err(StatsError::DegenerateInput(format!(
                    "group '{label}' needs at least {n} observations"
                )));
            }
        }
        Ok(())
    }
}

/// Midranks (average ranks for ties, 1-based) of the pooled data, returned
/// in pooled order, plus the tie-correction sum Σ(t³ − t).
fn midranks<S: Real>(pooled: &[S]) -> (Vec<S>, S) {
    let n = pooled.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| pooled[a].partial_cmp(&pooled[b]).expect("finite values"));
    let mut ranks = vec![S::zero(); n];
    let mut tie_sum = S::zero();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        // indices i..=j share one value; their midrank is the average of
        // positions i+1 ..= j+1
        let avg = S::of_usize(i + 1 + j + 1) / S::of(2.0);
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        let t = S::of_usize(j - i + 1);
        tie_sum += t * t * t - t;
        i = j + 1;
    }
    (ranks, tie_sum)
}

fn pooled_ranks<S: Real>(g: &GroupedSample<S>) -> (Vec<Vec<S>>, S) {
    let pooled: Vec<S> = g
        .groups
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .collect();
    let (ranks, tie_sum) = midranks(&pooled);
    let mut out = Vec::with_capacity(g.group_count());
    let mut offset = 0;
    for (_, values) in &g.groups {
        out.push(ranks[offset..offset + values.len()].to_vec());
        offset += values.len();
    }
    (out, tie_sum)
}

/// Kruskal–Wallis H (tie-corrected) and its chi-square p-value with k−1
/// degrees of freedom. All-tied data yields H = 0, p = 1.
pub fn kruskal_wallis<S: Real>(g: &GroupedSample<S>) -> Result<(S, S), StatsError> {
    g.require_groups(2)?;
    let n = g.total_len();
    if n < 3 {
        return Err(StatsError::DegenerateInput(
            "need at least 3 observations in total".into(),
        ));
    }
    let (h, _, _) = kw_statistic(g);
    let p = chi2_sf(h, g.group_count() - 1);
    Ok((h, p))
}

fn kw_statistic<S: Real>(g: &GroupedSample<S>) -> (S, Vec<Vec<S>>, S) {
    let n = S::of_usize(g.total_len());
    let (group_ranks, tie_sum) = pooled_ranks(g);
    let mut h = S::zero();
    for ranks in &group_ranks {
        let r: S = ranks.iter().copied().sum();
        h += r * r / S::of_usize(ranks.len());
    }
    h = S::of(12.0) / (n * (n + S::one())) * h - S::of(3.0) * (n + S::one());
    let correction = S::one() - tie_sum / (n * n * n - n);
    let h = if correction == S::zero() {
        S::zero()
    } else {
        (h / correction).max(S::zero())
    };
    (h, group_ranks, tie_sum)
}

/// One pairwise post-hoc comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseTest<S> {
    pub a: String,
    pub b: String,
    pub statistic: S,
    pub raw_p: S,
    pub holm_p: S,
}

/// Holm step-down adjustment: sort raw p ascending,
/// `adjusted_i = max over j <= i of min(1, (m-j+1) * p_j)`.
pub fn holm_adjust<S: Real>(raw: &[S]) -> Vec<S> {
    let m = raw.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| raw[a].partial_cmp(&raw[b]).expect("finite p-values"));
    let mut adjusted = vec![S::zero(); m];
    let mut running = S::zero();
    for (rank, &idx) in order.iter().enumerate() {
        let val = (S::of_usize(m - rank) * raw[idx]).min(S::one());
        running = running.max(val);
        adjusted[idx] = running;
    }
    adjusted
}

/// Conover–Iman pairwise comparisons from the pooled Kruskal–Wallis ranks,
/// with Holm-adjusted two-sided p-values. Statistic per Conover (1999):
/// `t = (R̄_i − R̄_j) / sqrt(S² · (N−1−H)/(N−k) · (1/n_i + 1/n_j))` with
/// `S² = (Σ R² − N(N+1)²/4)/(N−1)` and df = N − k.
pub fn conover_holm<S: Real>(g: &GroupedSample<S>) -> Result<Vec<PairwiseTest<S>>, StatsError> {
    g.require_groups(2)?;
    g.require_min_group_size(2)?;
    let k = g.group_count();
    let n = g.total_len();
    if n <= k {
        return Err(StatsError::DegenerateInput(
            "need more observations than groups".into(),
        ));
    }
    let (h, group_ranks, _) = kw_statistic(g);
    let n_s = S::of_usize(n);
    let sum_r2: S = group_ranks
        .iter()
        .flat_map(|r| r.iter())
        .map(|&r| r * r)
        .sum();
    let s2 = (sum_r2 - n_s * (n_s + S::one()) * (n_s + S::one()) / S::of(4.0))
        / (n_s - S::one());
    let df = n_s - S::of_usize(k);
    let scale = s2 * (n_s - S::one() - h) / df;
    let rbar: Vec<S> = group_ranks
        .iter()
        .map(|r| mean(r).expect("non-empty group"))
        .collect();

    let mut pairs = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let ni = S::of_usize(group_ranks[i].len());
            let nj = S::of_usize(group_ranks[j].len());
            let denom = (scale * (S::one() / ni + S::one() / nj)).sqrt();
            let (stat, raw_p) = if denom > S::zero() {
                let t = (rbar[i] - rbar[j]) / denom;
                (t, t_two_sided(t.abs(), df).min(S::one()))
            } else {
                // all observations tied: no evidence of difference
                (S::zero(), S::one())
            };
            pairs.push(PairwiseTest {
                a: g.groups[i].0.clone(),
                b: g.groups[j].0.clone(),
                statistic: stat,
                raw_p,
                holm_p: S::zero(),
            });
        }
    }
    let adjusted = holm_adjust(&pairs.iter().map(|p| p.raw_p).collect::<Vec<_>>());
    for (pair, adj) in pairs.iter_mut().zip(adjusted) {
        pair.holm_p = adj;
    }
    Ok(pairs)
}

/// Cliff's delta: (#{x > y} − #{x < y}) / (|a|·|b|), in [−1, 1].
pub fn cliffs_delta<S: Real>(a: &[S], b: &[S]) -> Result<S, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptyGroup);
    }
    let mut gt = 0usize;
    let mut lt = 0usize;
    for &x in a {
        for &y in b {
            if x > y {
                gt += 1;
            } else if x < y {
                lt += 1;
            }
        }
    }
    let nm = S::of_usize(a.len()) * S::of_usize(b.len());
    Ok((S::of_usize(gt) - S::of_usize(lt)) / nm)
}

/// How Levene's test centers each group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LeveneCenter {
    /// Classic Levene (absolute deviations from group means).
    #[default]
    Mean,
    /// Brown–Forsythe variant (deviations from group medians).
    Median,
}

/// Levene's test for homogeneity of variances; F-distributed W with
/// (k−1, N−k) degrees of freedom.
pub fn levene<S: Real>(g: &GroupedSample<S>, center: LeveneCenter) -> Result<(S, S), StatsError> {
    g.require_groups(2)?;
    g.require_min_group_size(2)?;
    let k = g.group_count();
    let n = g.total_len();
    let z: Vec<Vec<S>> = g
        .groups
        .iter()
        .map(|(_, values)| {
            let c = match center {
                LeveneCenter::Mean => mean(values).unwrap(),
                LeveneCenter::Median => median(values).unwrap(),
            };
            values.iter().map(|&v| (v - c).abs()).collect()
        })
        .collect();
    let zbar_i: Vec<S> = z.iter().map(|zi| mean(zi).unwrap()).collect();
    let zbar: S = z.iter().flat_map(|zi| zi.iter()).copied().sum::<S>() / S::of_usize(n);
    let mut between = S::zero();
    for (zi, &zb) in z.iter().zip(&zbar_i) {
        between += S::of_usize(zi.len()) * (zb - zbar) * (zb - zbar);
    }
    let mut within = S::zero();
    for (zi, &zb) in z.iter().zip(&zbar_i) {
        within += zi.iter().map(|&v| (v - zb) * (v - zb)).sum::<S>();
    }
    let df1 = S::of_usize(k - 1);
    let df2 = S::of_usize(n - k);
    let w = if between == S::zero() {
        S::zero()
    } else if within == S::zero() {
        S::infinity()
    } else {
        (df2 / df1) * between / within
    };
    Ok((w, f_sf(w, df1, df2)))
}

/// One-way ANOVA: F = MS_between / MS_within with (k−1, N−k) df.
pub fn anova_oneway<S: Real>(g: &GroupedSample<S>) -> Result<(S, usize, usize, S), StatsError> {
    g.require_groups(2)?;
    g.require_min_group_size(2)?;
    let k = g.group_count();
    let n = g.total_len();
    let grand: S = g
        .groups
        .iter()
        .flat_map(|(_, v)| v.iter())
        .copied()
        .sum::<S>()
        / S::of_usize(n);
    let mut ssb = S::zero();
    let mut ssw = S::zero();
    for (_, values) in &g.groups {
        let m = mean(values).unwrap();
        ssb += S::of_usize(values.len()) * (m - grand) * (m - grand);
        ssw += values.iter().map(|&v| (v - m) * (v - m)).sum::<S>();
    }
    let df1 = k - 1;
    let df2 = n - k;
    let f = if ssb == S::zero() {
        S::zero()
    } else if ssw == S::zero() {
        S::infinity()
    } else {
        (ssb / S::of_usize(df1)) / (ssw / S::of_usize(df2))
    };
    let p = f_sf(f, S::of_usize(df1), S::of_usize(df2));
    Ok((f, df1, df2, p))
}

/// Pooled-variance two-sample Student t-test, df = |a| + |b| − 2, two-sided.
pub fn t_test<S: Real>(a: &[S], b: &[S]) -> Result<(S, usize, S), StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::DegenerateInput(
            "each sample needs at least 2 observations".into(),
        ));
    }
    let (na, nb) = (S::of_usize(a.len()), S::of_usize(b.len()));
    let (ma, mb) = (mean(a).unwrap(), mean(b).unwrap());
    let ssa: S = a.iter().map(|&v| (v - ma) * (v - ma)).sum();
    let ssb: S = b.iter().map(|&v| (v - mb) * (v - mb)).sum();
    let df = a.len() + b.len() - 2;
    let sp2 = (ssa + ssb) / S::of_usize(df);
    let se = (sp2 * (S::one() / na + S::one() / nb)).sqrt();
    let diff = ma - mb;
    let (t, p) = if diff == S::zero() {
        (S::zero(), S::one())
    } else if se == S::zero() {
        (diff.signum() * S::infinity(), S::zero())
    } else {
        let t = diff / se;
        (t, t_two_sided(t.abs(), S::of_usize(df)))
    };
    Ok((t, df, p))
}

/// Which test family [`compare_groups`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFamily {
    /// Kruskal–Wallis, then Conover–Iman + Holm when significant.
    Nonparametric,
    /// Levene gate, one-way ANOVA, then pairwise t-tests + Holm.
    Parametric,
}

/// One group pair in a [`ComparisonResult`]: adjusted p plus effect size.
#[derive(Debug, Clone, PartialEq)]
pub struct PairComparison<S> {
    pub a: String,
    pub b: String,
    pub raw_p: S,
    pub holm_p: S,
    pub cliffs_delta: S,
}

/// Output of [`compare_groups`], mirroring one metric row of the report
/// tables: group centers, omnibus p, per-pair results and the direction
/// string ("–" when the omnibus is not significant).
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonResult<S> {
    pub labels: Vec<String>,
    /// Group medians (nonparametric) or means (parametric).
    pub centers: Vec<S>,
    pub omnibus_stat: S,
    pub omnibus_p: S,
    /// Levene (W, p) when the parametric family ran.
    pub levene: Option<(S, S)>,
    pub pairs: Vec<PairComparison<S>>,
    pub direction: String,
    pub alpha: S,
}

/// Runs the omnibus test and, when significant at `alpha`, the pairwise
/// battery; builds the direction string from significant Holm pairs.
pub fn compare_groups<S: Real>(
    g: &GroupedSample<S>,
    family: TestFamily,
    alpha: S,
) -> Result<ComparisonResult<S>, StatsError> {
    let labels: Vec<String> = g.groups.iter().map(|(l, _)| l.clone()).collect();
    let centers: Vec<S> = g
        .groups
        .iter()
        .map(|(_, v)| match family {
            TestFamily::Nonparametric => median(v).unwrap(),
            TestFamily::Parametric => mean(v).unwrap(),
        })
        .collect();

    let (omnibus_stat, omnibus_p, levene_result) = match family {
        TestFamily::Nonparametric => {
            let (h, p) = kruskal_wallis(g)?;
            (h, p, None)
        }
        TestFamily::Parametric => {
            let gate = levene(g, LeveneCenter::Mean)?;
            let (f, _, _, p) = anova_oneway(g)?;
            (f, p, Some(gate))
        }
    };

    let mut pairs = Vec::new();
    if omnibus_p < alpha {
        match family {
            TestFamily::Nonparametric => {
                for test in conover_holm(g)? {
                    let (ai, bi) = (index_of(&labels, &test.a), index_of(&labels, &test.b));
                    pairs.push(PairComparison {
                        cliffs_delta: cliffs_delta(&g.groups[ai].1, &g.groups[bi].1)?,
                        a: test.a,
                        b: test.b,
                        raw_p: test.raw_p,
                        holm_p: test.holm_p,
                    });
                }
            }
            TestFamily::Parametric => {
                let k = g.group_count();
                let mut raw = Vec::new();
                for i in 0..k {
                    for j in i + 1..k {
                        let (_, _, p) = t_test(&g.groups[i].1, &g.groups[j].1)?;
                        raw.push((i, j, p));
                    }
                }
                let adjusted = holm_adjust(&raw.iter().map(|&(_, _, p)| p).collect::<Vec<_>>());
                for (&(i, j, p), holm_p) in raw.iter().zip(adjusted) {
                    pairs.push(PairComparison {
                        a: labels[i].clone(),
                        b: labels[j].clone(),
                        raw_p: p,
                        holm_p,
                        cliffs_delta: cliffs_delta(&g.groups[i].1, &g.groups[j].1)?,
                    });
                }
            }
        }
    }

    let direction = direction_string(&labels, &centers, &pairs, alpha);
    Ok(ComparisonResult {
        labels,
        centers,
        omnibus_stat,
        omnibus_p,
        levene: levene_result,
        pairs,
        direction,
        alpha,
    })
}

fn index_of(labels: &[String], l: &str) -> usize {
    labels.iter().position(|x| x == l).expect("known label")
}

/// Renders the partial order implied by the significant pairs, e.g.
/// "M > H > C" or "H, M > C"; groups in no significant pair are omitted
/// and "–" is returned when there are none.
fn direction_string<S: Real>(
    labels: &[String],
    centers: &[S],
    pairs: &[PairComparison<S>],
    alpha: S,
) -> String {
    // significant edges winner -> loser; pairs with tied centers are
    // unrankable and skipped
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for p in pairs {
        if p.holm_p < alpha {
            let (ai, bi) = (index_of(labels, &p.a), index_of(labels, &p.b));
            if centers[ai] > centers[bi] {
                edges.push((ai, bi));
            } else if centers[bi] > centers[ai] {
                edges.push((bi, ai));
            }
        }
    }
    if edges.is_empty() {
        return "–".to_string();
    }
    let mut remaining: Vec<usize> = {
        let mut v: Vec<usize> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let mut layers: Vec<String> = Vec::new();
    while !remaining.is_empty() {
        let mut sources: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&g| {
                !edges
                    .iter()
                    .any(|&(w, l)| l == g && remaining.contains(&w))
            })
            .collect();
        if sources.is_empty() {
            // centers are a total preorder, so domination cycles cannot
            // occur; flush whatever is left to guarantee termination
            sources = remaining.clone();
        }
        sources.sort_by(|&a, &b| {
            centers[b]
                .partial_cmp(&centers[a])
                .expect("finite centers")
                .then_with(|| labels[a].cmp(&labels[b]))
        });
        layers.push(
            sources
                .iter()
                .map(|&g| labels[g].as_str())
                .collect::<Vec<_>>()
                .join(", "),
        );
        remaining.retain(|g| !sources.contains(g));
    }
    layers.join(" > ")
}
