//! Dense discrete factors. Variables are network node ids; the last
//! variable in `vars` varies fastest.

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub vars: Vec<usize>,
    pub cards: Vec<usize>,
    pub values: Vec<f64>,
}

/// Calls `f(i, j)` for every flat index `i` of a table with `cards`, where
/// `j` is the matching index into a table addressed by `strides` (one
/// stride per dimension of `cards`, zero for absent dimensions).
#[inline]
fn walk(cards: &[usize], strides: &[usize], base: usize, mut f: impl FnMut(usize, usize)) {
    let total: usize = cards.iter().product();
    let d = cards.len();
    let mut digits = vec![0usize; d];
    let mut j = base;
    for i in 0..total {
        f(i, j);
        let mut k = d;
        while k > 0 {
            k -= 1;
            digits[k] += 1;
            j += strides[k];
            if digits[k] < cards[k] {
                break;
            }
            j -= strides[k] * cards[k];
            digits[k] = 0;
        }
    }
}

impl Factor {
    pub fn ones(vars: Vec<usize>, cards: Vec<usize>) -> Self {
        let n = cards.iter().product();
        Factor {
            vars,
            cards,
            values: vec![1.0; n],
        }
    }

    pub fn scalar(value: f64) -> Self {
        Factor {
            vars: Vec::new(),
            cards: Vec::new(),
            values: vec![value],
        }
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![0; self.vars.len()];
        let mut acc = 1;
        for k in (0..self.vars.len()).rev() {
            s[k] = acc;
            acc *= self.cards[k];
        }
        s
    }

    /// Strides of `self` re-expressed along the dimensions of `outer`
    /// (zero where `outer` has a variable `self` lacks).
    fn strides_in(&self, outer: &[usize]) -> Vec<usize> {
        let own = self.strides();
        outer
            .iter()
            .map(|v| self.vars.iter().position(|w| w == v).map_or(0, |k| own[k]))
            .collect()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Scales to sum 1 and returns the previous sum. A zero factor stays zero.
    pub fn normalize(&mut self) -> f64 {
        let s = self.sum();
        if s > 0.0 {
            let inv = 1.0 / s;
            self.values.iter_mut().for_each(|x| *x *= inv);
        }
        s
    }

    /// Pointwise product with a factor over a subset of `self.vars`.
    pub fn multiply_in(&mut self, other: &Factor) {
        debug_assert!(other.vars.iter().all(|v| self.vars.contains(v)));
        let strides = other.strides_in(&self.vars);
        let vals = &mut self.values;
        walk(&self.cards, &strides, 0, |i, j| vals[i] *= other.values[j]);
    }

    /// Sums out everything but `onto` (a subset of `self.vars`, in that order).
    pub fn project(&self, onto: &[usize]) -> Factor {
        let cards: Vec<usize> = onto
            .iter()
            .map(|v| {
                let k = self.vars.iter().position(|w| w == v).expect("projection var not in scope");
                self.cards[k]
            })
            .collect();
        let mut out = Factor::ones(onto.to_vec(), cards);
        out.values.iter_mut().for_each(|x| *x = 0.0);
        let strides = out.strides_in(&self.vars);
        let out_vals = &mut out.values;
        walk(&self.cards, &strides, 0, |i, j| out_vals[j] += self.values[i]);
        out
    }

    /// `self[x] = self[x] * num[x] / den[x]` over a subset scope; `0/0 = 0`.
    pub fn multiply_ratio(&mut self, num: &Factor, den: &Factor) {
        debug_assert_eq!(num.vars, den.vars);
        let ratio = Factor {
            vars: num.vars.clone(),
            cards: num.cards.clone(),
            values: num
                .values
                .iter()
                .zip(&den.values)
                .map(|(&a, &b)| if b == 0.0 { 0.0 } else { a / b })
                .collect(),
        };
        self.multiply_in(&ratio);
    }

    /// Reduces a CPT to the unobserved members of its family.
    ///
    /// `family` is `parents ++ [node]`, matching the CPT layout (first parent
    /// most significant, node fastest). Observed family members are fixed at
    /// their evidence value.
    pub fn from_cpt(family: &[usize], family_cards: &[usize], table: &[f64], evidence: &[Option<usize>]) -> Factor {
        let mut cpt_strides = vec![0; family.len()];
        let mut acc = 1;
        for k in (0..family.len()).rev() {
            cpt_strides[k] = acc;
            acc *= family_cards[k];
        }
        let mut base = 0;
        let mut vars = Vec::new();
        let mut cards = Vec::new();
        let mut strides = Vec::new();
        for (k, &v) in family.iter().enumerate() {
            match evidence[v] {
                Some(x) => base += x * cpt_strides[k],
                None => {
                    vars.push(v);
                    cards.push(family_cards[k]);
                    strides.push(cpt_strides[k]);
                }
            }
        }
        let mut out = Factor::ones(vars, cards);
        let vals = &mut out.values;
        walk(&out.cards.clone(), &strides, base, |i, j| vals[i] = table[j]);
        out
    }

    /// Adds `self` (over the unobserved members of `family`) into a flat
    /// CPT-shaped count table. Inverse of [`Factor::from_cpt`].
    pub fn add_to_cpt(&self, family: &[usize], family_cards: &[usize], evidence: &[Option<usize>], out: &mut [f64]) {
        let mut cpt_strides = vec![0; family.len()];
        let mut acc = 1;
        for k in (0..family.len()).rev() {
            cpt_strides[k] = acc;
            acc *= family_cards[k];
        }
        let mut base = 0;
        let mut strides = Vec::new();
        for (k, &v) in family.iter().enumerate() {
            match evidence[v] {
                Some(x) => base += x * cpt_strides[k],
                None => strides.push(cpt_strides[k]),
            }
        }
        debug_assert_eq!(strides.len(), self.vars.len());
        walk(&self.cards, &strides, base, |i, j| out[j] += self.values[i]);
    }

    /// Value at a full assignment of `self.vars`.
    pub fn at(&self, assignment: &[usize]) -> f64 {
        let strides = self.strides();
        self.values[assignment.iter().zip(&strides).map(|(a, s)| a * s).sum::<usize>()]
    }
}
