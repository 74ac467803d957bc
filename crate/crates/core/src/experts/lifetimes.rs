/// Birth and expiry schedule for experts numbered `1, 2, …`.
///
/// Expert `j = r·2^k` (r odd) is born at round `1 + (j−1)·birth_every` and stays alive for
/// `max(birth_every·(2^{k+2}+1), min_lifetime)` further rounds. The default schedule
/// (`birth_every = 1`, no padding) is the dyadic working-set rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lifetimes {
    pub birth_every: usize,
    pub min_lifetime: usize,
}

impl Default for Lifetimes {
    fn default() -> Self {
        Lifetimes {
            birth_every: 1,
            min_lifetime: 0,
        }
    }
}

impl Lifetimes {
    pub fn padded(birth_every: usize, min_lifetime: usize) -> Self {
        Lifetimes {
            birth_every: birth_every.max(1),
            min_lifetime,
        }
    }

    fn span(&self, level: u32) -> usize {
        (self.birth_every * ((1usize << (level + 2)) + 1)).max(self.min_lifetime)
    }

    pub fn birth(&self, j: usize) -> usize {
        1 + (j - 1) * self.birth_every
    }

    /// Last round at which expert `j` is alive.
    pub fn expiry(&self, j: usize) -> usize {
        self.birth(j) + self.span(j.trailing_zeros())
    }

    pub fn is_alive(&self, j: usize, t: usize) -> bool {
        self.birth(j) <= t && t <= self.expiry(j)
    }

    /// Number of experts born by round `t`.
    pub fn born_by(&self, t: usize) -> usize {
        if t == 0 {
            0
        } else {
            (t - 1) / self.birth_every + 1
        }
    }

    /// Expert born exactly at round `t`, if any.
    pub fn newborn(&self, t: usize) -> Option<usize> {
        (t >= 1 && (t - 1) % self.birth_every == 0).then(|| (t - 1) / self.birth_every + 1)
    }

    /// Alive experts at round `t`, ascending.
    pub fn members(&self, t: usize) -> Vec<usize> {
        let born = self.born_by(t);
        let mut out = Vec::new();
        let mut level = 0u32;
        while (1usize << level) <= born {
            let step = 1usize << (level + 1);
            let offset = 1usize << level;
            // earliest birth round still alive at t for this level
            let oldest_birth = t.saturating_sub(self.span(level)).max(1);
            let lower = (oldest_birth - 1).div_ceil(self.birth_every) + 1;
            let mut j = if lower <= offset {
                offset
            } else {
                offset + (lower - offset).div_ceil(step) * step
            };
            while j <= born {
                if self.is_alive(j, t) {
                    out.push(j);
                }
                j += step;
            }
            level += 1;
        }
        out.sort_unstable();
        out
    }

    /// Experts alive at `t` but not at `t + 1`.
    pub fn expiring(&self, t: usize) -> Vec<usize> {
        self.members(t).into_iter().filter(|&j| self.expiry(j) == t).collect()
    }
}

/// Alive expert indices at round `t` under the dyadic rule, restricted to the horizon.
pub fn working_set(t: usize, horizon: usize) -> Vec<usize> {
    Lifetimes::default()
        .members(t)
        .into_iter()
        .filter(|&i| i <= horizon)
        .collect()
}
