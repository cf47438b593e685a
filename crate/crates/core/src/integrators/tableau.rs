use crate::error::{Error, Result};

/// Explicit Runge-Kutta tableau (strictly lower triangular `a`).
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    pub name: String,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub order: usize,
}

/// Additive (IMEX) Runge-Kutta pair: an ESDIRK part for the linear terms and
/// an explicit part for the nonlinear terms.
///
/// The weights are stored separately because ARS-type methods use different
/// explicit and implicit weights; Kennedy-Carpenter pairs share them.
#[derive(Debug, Clone, PartialEq)]
pub struct ImexTableau {
    pub name: String,
    pub stages: usize,
    pub a_implicit: Vec<Vec<f64>>,
    pub a_explicit: Vec<Vec<f64>>,
    pub b_implicit: Vec<f64>,
    pub b_explicit: Vec<f64>,
    pub c_implicit: Vec<f64>,
    pub c_explicit: Vec<f64>,
    pub order: usize,
}

fn square(rows: &[&[f64]], s: usize) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|r| {
            let mut row = r.to_vec();
            row.resize(s, 0.0);
            row
        })
        .collect()
}

fn row_sums(a: &[Vec<f64>]) -> Vec<f64> {
    a.iter().map(|r| r.iter().sum()).collect()
}

impl ButcherTableau {
    pub fn new(name: &str, a: &[&[f64]], b: &[f64], order: usize) -> Result<Self> {
        let s = b.len();
        let a = square(a, s);
        let c = row_sums(&a);
        let t = Self { name: name.to_string(), a, b: b.to_vec(), c, order };
        t.validate()?;
        Ok(t)
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.stages();
        if self.a.len() != s || self.a.iter().any(|r| r.len() != s) {
            return Err(Error::InvalidArgument(format!("{}: inconsistent tableau shape", self.name)));
        }
        for (i, row) in self.a.iter().enumerate() {
            if row[i..].iter().any(|x| *x != 0.0) {
                return Err(Error::InvalidArgument(format!("{}: explicit tableau must be strictly lower", self.name)));
            }
        }
        check_orders(&self.name, &[&self.a], &[&self.b], self.order)
    }
}

impl ImexTableau {
    pub fn new(
        name: &str,
        a_implicit: &[&[f64]],
        a_explicit: &[&[f64]],
        b_implicit: &[f64],
        b_explicit: &[f64],
        order: usize,
    ) -> Result<Self> {
        let s = b_implicit.len();
        let a_implicit = square(a_implicit, s);
        let a_explicit = square(a_explicit, s);
        let t = Self {
            name: name.to_string(),
            stages: s,
            c_implicit: row_sums(&a_implicit),
            c_explicit: row_sums(&a_explicit),
            a_implicit,
            a_explicit,
            b_implicit: b_implicit.to_vec(),
            b_explicit: b_explicit.to_vec(),
            order,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.stages;
        let shape_ok = self.a_implicit.len() == s
            && self.a_explicit.len() == s
            && self.a_implicit.iter().chain(&self.a_explicit).all(|r| r.len() == s)
            && self.b_explicit.len() == s
            && self.b_implicit.len() == s;
        if !shape_ok {
            return Err(Error::InvalidArgument(format!("{}: inconsistent tableau shape", self.name)));
        }
        for i in 0..s {
            if self.a_implicit[i][i + 1..].iter().any(|x| *x != 0.0) || self.a_explicit[i][i..].iter().any(|x| *x != 0.0) {
                return Err(Error::InvalidArgument(format!("{}: tableau is not (strictly) lower triangular", self.name)));
            }
            if (self.c_implicit[i] - self.c_explicit[i]).abs() > 1e-10 {
                return Err(Error::InvalidArgument(format!("{}: abscissae of the two parts differ at stage {i}", self.name)));
            }
        }
        check_orders(&self.name, &[&self.a_explicit, &self.a_implicit], &[&self.b_explicit, &self.b_implicit], self.order)
    }

    /// The last stage is the update when both weight vectors equal the last rows.
    pub fn stiffly_accurate(&self) -> bool {
        let s = self.stages;
        self.b_implicit == self.a_implicit[s - 1] && self.b_explicit == self.a_explicit[s - 1]
    }

    /// Stability function `R(z)` of the implicit part for `y' = z y`.
    pub fn implicit_stability(&self, z: f64) -> f64 {
        let s = self.stages;
        let mut y = vec![0.0; s];
        for i in 0..s {
            let rhs = 1.0 + z * (0..i).map(|j| self.a_implicit[i][j] * y[j]).sum::<f64>();
            y[i] = rhs / (1.0 - z * self.a_implicit[i][i]);
        }
        1.0 + z * self.b_implicit.iter().zip(&y).map(|(b, y)| b * y).sum::<f64>()
    }
}

/// Rooted tree whose nodes carry a color selecting one of the coupled tableaus.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct ColoredTree {
    color: usize,
    children: Vec<ColoredTree>,
}

impl ColoredTree {
    fn size(&self) -> usize {
        1 + self.children.iter().map(Self::size).sum::<usize>()
    }

    fn density(&self) -> f64 {
        self.size() as f64 * self.children.iter().map(Self::density).product::<f64>()
    }
}

/// All colored rooted trees with `n` nodes, indexed by size.
fn colored_trees(max: usize, colors: usize) -> Vec<Vec<ColoredTree>> {
    let mut by_size: Vec<Vec<ColoredTree>> = vec![Vec::new(); max + 1];
    for n in 1..=max {
        // flat list of smaller trees; children are nondecreasing in this list to avoid permutations
        let pool: Vec<&ColoredTree> = by_size[1..n].iter().flatten().collect();
        let mut multisets: Vec<Vec<usize>> = Vec::new();
        let mut stack: Vec<(Vec<usize>, usize, usize)> = vec![(Vec::new(), 0, n - 1)];
        while let Some((chosen, start, rem)) = stack.pop() {
            if rem == 0 {
                multisets.push(chosen);
                continue;
            }
            for (k, t) in pool.iter().enumerate().skip(start) {
                let sz = t.size();
                if sz <= rem {
                    let mut next = chosen.clone();
                    next.push(k);
                    stack.push((next, k, rem - sz));
                }
            }
        }
        let mut out = Vec::new();
        for color in 0..colors {
            for m in &multisets {
                out.push(ColoredTree { color, children: m.iter().map(|&k| pool[k].clone()).collect() });
            }
        }
        by_size[n] = out;
    }
    by_size
}

/// Largest defect of the (coupled) order conditions up to `order`.
pub(crate) fn order_defect(a: &[&Vec<Vec<f64>>], b: &[&Vec<f64>], order: usize) -> f64 {
    let s = b[0].len();
    fn weights(t: &ColoredTree, a: &[&Vec<Vec<f64>>], s: usize) -> Vec<f64> {
        let mut g = vec![1.0; s];
        for c in &t.children {
            let gc = weights(c, a, s);
            let am = a[c.color];
            for (i, gi) in g.iter_mut().enumerate() {
                *gi *= (0..s).map(|j| am[i][j] * gc[j]).sum::<f64>();
            }
        }
        g
    }
    let mut worst: f64 = 0.0;
    for trees in colored_trees(order, a.len()).iter().skip(1) {
        for t in trees {
            let g = weights(t, a, s);
            let phi: f64 = b[t.color].iter().zip(&g).map(|(x, y)| x * y).sum();
            worst = worst.max((phi - 1.0 / t.density()).abs());
        }
    }
    worst
}

fn check_orders(name: &str, a: &[&Vec<Vec<f64>>], b: &[&Vec<f64>], order: usize) -> Result<()> {
    // Published coefficients are rational approximations good to about 1e-12.
    let defect = order_defect(a, b, order.min(3));
    if defect > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "{name}: order conditions up to {} violated (defect {defect:e})",
            order.min(3)
        )));
    }
    Ok(())
}

pub fn rk4() -> ButcherTableau {
    ButcherTableau::new("rk4", &[&[], &[0.5], &[0.0, 0.5], &[0.0, 0.0, 1.0]], &[1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0], 4)
        .expect("valid tableau")
}

pub fn heun() -> ButcherTableau {
    ButcherTableau::new("heun", &[&[], &[1.0]], &[0.5, 0.5], 2).expect("valid tableau")
}

/// ARS(4,4,3) of Ascher, Ruuth and Spiteri.
pub fn ars443() -> ImexTableau {
    ImexTableau::new(
        "ars343",
        &[&[0.0], &[0.0, 0.5], &[0.0, 1.0 / 6.0, 0.5], &[0.0, -0.5, 0.5, 0.5], &[0.0, 1.5, -1.5, 0.5, 0.5]],
        &[&[], &[0.5], &[11.0 / 18.0, 1.0 / 18.0], &[5.0 / 6.0, -5.0 / 6.0, 0.5], &[0.25, 1.75, 0.75, -1.75]],
        &[0.0, 1.5, -1.5, 0.5, 0.5],
        &[0.25, 1.75, 0.75, -1.75, 0.0],
        3,
    )
    .expect("valid tableau")
}

const KC4_B: [f64; 7] = [
    0.0,
    0.0,
    9164257142617.0 / 17756377923965.0,
    -10812980402763.0 / 74029279521829.0,
    1335994250573.0 / 5691609445217.0,
    2273837961795.0 / 8368240463276.0,
    247.0 / 2000.0,
];

/// ARK4(3)7L[2]SA1 of Kennedy and Carpenter.
pub fn kc43() -> ImexTableau {
    let g = 1235.0 / 10000.0;
    ImexTableau::new(
        "kc43",
        &[
            &[0.0],
            &[g, g],
            &[624185399699.0 / 4186980696204.0, 624185399699.0 / 4186980696204.0, g],
            &[1258591069120.0 / 10082082980243.0, 1258591069120.0 / 10082082980243.0, -322722984531.0 / 8455138723562.0, g],
            &[
                -436103496990.0 / 5971407786587.0,
                -436103496990.0 / 5971407786587.0,
                -2689175662187.0 / 11046760208243.0,
                4431412449334.0 / 12995360898505.0,
                g,
            ],
            &[
                -2207373168298.0 / 14430576638973.0,
                -2207373168298.0 / 14430576638973.0,
                242511121179.0 / 3358618340039.0,
                3145666661981.0 / 7780404714551.0,
                5882073923981.0 / 14490790706663.0,
                g,
            ],
            &KC4_B,
        ],
        &[
            &[],
            &[247.0 / 1000.0],
            &[247.0 / 4000.0, 2694949928731.0 / 7487940209513.0],
            &[464650059369.0 / 8764239774964.0, 878889893998.0 / 2444806327765.0, -952945855348.0 / 12294611323341.0],
            &[
                476636172619.0 / 8159180917465.0,
                -1271469283451.0 / 7793814740893.0,
                -859560642026.0 / 4356155882851.0,
                1723805262919.0 / 4571918432560.0,
            ],
            &[
                6338158500785.0 / 11769362343261.0,
                -4970555480458.0 / 10924838743837.0,
                3326578051521.0 / 2647936831840.0,
                -880713585975.0 / 1841400956686.0,
                -1428733748635.0 / 8843423958496.0,
            ],
            &[
                760814592956.0 / 3276306540349.0,
                760814592956.0 / 3276306540349.0,
                -47223648122716.0 / 6934462133451.0,
                71187472546993.0 / 9669769126921.0,
                -13330509492149.0 / 9695768672337.0,
                11565764226357.0 / 8513123442827.0,
            ],
        ],
        &KC4_B,
        &KC4_B,
        4,
    )
    .expect("valid tableau")
}

const KC5_B: [f64; 8] = [
    0.0,
    0.0,
    3517720773327.0 / 20256071687669.0,
    4569610470461.0 / 17934693873752.0,
    2819471173109.0 / 11655438449929.0,
    3296210113763.0 / 10722700128969.0,
    -1142099968913.0 / 5710983926999.0,
    2.0 / 9.0,
];

/// ARK5(4)8L[2]SA2 of Kennedy and Carpenter.
pub fn kc54() -> ImexTableau {
    let g = 2.0 / 9.0;
    ImexTableau::new(
        "kc54",
        &[
            &[0.0],
            &[g, g],
            &[2366667076620.0 / 8822750406821.0, 2366667076620.0 / 8822750406821.0, g],
            &[-257962897183.0 / 4451812247028.0, -257962897183.0 / 4451812247028.0, 128530224461.0 / 14379561246022.0, g],
            &[
                -486229321650.0 / 11227943450093.0,
                -486229321650.0 / 11227943450093.0,
                -225633144460.0 / 6633558740617.0,
                1741320951451.0 / 6824444397158.0,
                g,
            ],
            &[
                621307788657.0 / 4714163060173.0,
                621307788657.0 / 4714163060173.0,
                -125196015625.0 / 3866852212004.0,
                940440206406.0 / 7593089888465.0,
                961109811699.0 / 6734810228204.0,
                g,
            ],
            &[
                2036305566805.0 / 6583108094622.0,
                2036305566805.0 / 6583108094622.0,
                -3039402635899.0 / 4450598839912.0,
                -1829510709469.0 / 31102090912115.0,
                -286320471013.0 / 6931253422520.0,
                8651533662697.0 / 9642993110008.0,
                g,
            ],
            &KC5_B,
        ],
        &[
            &[],
            &[4.0 / 9.0],
            &[1.0 / 9.0, 1183333538310.0 / 1827251437969.0],
            &[895379019517.0 / 9750411845327.0, 477606656805.0 / 13473228687314.0, -112564739183.0 / 9373365219272.0],
            &[
                -4458043123994.0 / 13015289567637.0,
                -2500665203865.0 / 9342069639922.0,
                983347055801.0 / 8893519644487.0,
                2185051477207.0 / 2551468980502.0,
            ],
            &[
                -167316361917.0 / 17121522574472.0,
                1605541814917.0 / 7619724128744.0,
                991021770328.0 / 13052792161721.0,
                2342280609577.0 / 11279663441611.0,
                3012424348531.0 / 12792462456678.0,
            ],
            &[
                6680998715867.0 / 14310383562358.0,
                5029118570809.0 / 3897454228471.0,
                2415062538259.0 / 6382199904604.0,
                -3924368632305.0 / 6964820224454.0,
                -4331110370267.0 / 15021686902756.0,
                -3944303808049.0 / 11994238218192.0,
            ],
            &[
                2193717860234.0 / 3570523412979.0,
                2193717860234.0 / 3570523412979.0,
                5952760925747.0 / 18750164281544.0,
                -4412967128996.0 / 6196664114337.0,
                4151782504231.0 / 36106512998704.0,
                572599549169.0 / 6265429158920.0,
                -457874356192.0 / 11306498036315.0,
            ],
        ],
        &KC5_B,
        &KC5_B,
        5,
    )
    .expect("valid tableau")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_counts() {
        // one color: 1, 1, 2, 4, 9 trees; two colors: 2, 4, 14, 52
        let one = colored_trees(5, 1);
        assert_eq!(one.iter().skip(1).map(Vec::len).collect::<Vec<_>>(), vec![1, 1, 2, 4, 9]);
        let two = colored_trees(4, 2);
        assert_eq!(two.iter().skip(1).map(Vec::len).collect::<Vec<_>>(), vec![2, 4, 14, 52]);
    }

    #[test]
    fn full_coupled_orders() {
        for (t, p) in [(ars443(), 3), (kc43(), 4), (kc54(), 5)] {
            let a = [&t.a_explicit, &t.a_implicit];
            let b = [&t.b_explicit, &t.b_implicit];
            assert!(order_defect(&a, &b, p) < 1e-10, "{} order {p}", t.name);
            assert!(order_defect(&a, &b, p + 1) > 1e-6, "{} exceeds order {p}", t.name);
        }
        let r = rk4();
        assert!(order_defect(&[&r.a], &[&r.b], 4) < 1e-15);
    }

    #[test]
    fn weights_and_abscissae() {
        for t in [ars443(), kc43(), kc54()] {
            assert!((t.b_implicit.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!((t.b_explicit.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!((t.c_explicit[t.stages - 1] - 1.0).abs() < 1e-10);
        }
        assert!(ars443().stiffly_accurate());
        assert!(!kc43().stiffly_accurate());
        assert!(!kc54().stiffly_accurate());
    }

    #[test]
    fn implicit_parts_are_l_stable() {
        for t in [ars443(), kc43(), kc54()] {
            assert!(t.implicit_stability(-1e8).abs() < 1e-6, "{}", t.name);
            assert!(t.implicit_stability(-1.0).abs() < 1.0);
        }
    }

    #[test]
    fn corrupted_tableau_is_rejected() {
        let bad = ImexTableau::new("bad", &[&[0.0], &[0.0, 0.5]], &[&[], &[0.5]], &[0.0, 1.0], &[0.0, 1.1], 2);
        assert!(bad.is_err());
        assert!(ButcherTableau::new("bad", &[&[], &[1.0]], &[0.6, 0.5], 2).is_err());
    }
}
