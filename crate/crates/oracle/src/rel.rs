//! Dense binary relations over event indices.

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rel {
    n: usize,
    rows: Vec<Vec<u64>>,
}

impl Rel {
    pub fn new(n: usize) -> Rel {
        Rel {
            n,
            rows: vec![vec![0; n.div_ceil(64).max(1)]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn add(&mut self, a: usize, b: usize) {
        self.rows[a][b / 64] |= 1 << (b % 64);
    }

    pub fn get(&self, a: usize, b: usize) -> bool {
        self.rows[a][b / 64] >> (b % 64) & 1 == 1
    }

    /// Transitive closure in place.
    pub fn closure(&mut self) {
        for k in 0..self.n {
            let rk = self.rows[k].clone();
            for i in 0..self.n {
                if self.get(i, k) {
                    for (w, &x) in self.rows[i].iter_mut().zip(&rk) {
                        *w |= x;
                    }
                }
            }
        }
    }

    pub fn is_acyclic(&self) -> bool {
        let mut c = self.clone();
        c.closure();
        (0..self.n).all(|i| !c.get(i, i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closure_chain() {
        let mut r = Rel::new(70);
        for i in 0..69 {
            r.add(i, i + 1);
        }
        r.closure();
        assert!(r.get(0, 69));
        assert!(!r.get(69, 0));
        assert!(r.is_acyclic());
        r.add(69, 0);
        assert!(!r.is_acyclic());
    }
}
