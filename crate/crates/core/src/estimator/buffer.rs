use std::collections::VecDeque;

use super::links::{LinkIndex, LinkMode};

/// Unbiased sample variance (divisor `n - 1`), two-pass. Zero for fewer
/// than two values.
pub fn sample_variance<'a, I>(values: I) -> f64
where
    I: IntoIterator<Item = &'a f64>,
    I::IntoIter: Clone,
{
    let it = values.into_iter();
    let (n, sum) = it.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    if n < 2 {
        return 0.0;
    }
    let mean = sum / n as f64;
    let ss: f64 = it.map(|v| (v - mean) * (v - mean)).sum();
    ss / (n - 1) as f64
}

/// The most recent `capacity` RSS values of one link.
#[derive(Debug, Clone, PartialEq)]
pub struct RssBuffer {
    samples: VecDeque<f64>,
    capacity: usize,
}

impl RssBuffer {
    /// # Panics
    /// If `capacity < 2`.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 2, "an RSS buffer needs room for at least two samples");
        Self {
            samples: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.samples.len() == self.capacity
    }

    pub fn push(&mut self, rss_db: f64) {
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back(rss_db);
    }

    pub fn variance(&self) -> f64 {
        sample_variance(&self.samples)
    }

    pub fn push_and_variance(&mut self, rss_db: f64) -> f64 {
        self.push(rss_db);
        self.variance()
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.samples.iter()
    }
}

/// One [`RssBuffer`] per directed link of an `n`-node network.
#[derive(Debug, Clone)]
pub struct VarianceBank {
    nodes: usize,
    buffers: Vec<RssBuffer>,
}

impl VarianceBank {
    pub fn new(nodes: usize, capacity: usize) -> Self {
        Self {
            nodes,
            buffers: vec![RssBuffer::new(capacity); nodes * nodes],
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn buffer(&self, tx: usize, rx: usize) -> &RssBuffer {
        &self.buffers[tx * self.nodes + rx]
    }

    /// # Panics
    /// If either id is not below the node count.
    pub fn push(&mut self, tx: usize, rx: usize, rss_db: f64) {
        assert!(tx < self.nodes && rx < self.nodes, "node id out of range");
        self.buffers[tx * self.nodes + rx].push(rss_db);
    }

    /// Variance estimate of every link of `index`, in index order.
    ///
    /// For reciprocal links the two directions are averaged over those with
    /// at least two samples. Links with no usable direction read 0.
    pub fn variance_vector(&self, index: &LinkIndex) -> Vec<f64> {
        index
            .links()
            .iter()
            .map(|l| {
                let forward = self.buffer(l.a, l.b);
                match index.mode() {
                    LinkMode::Directed => forward.variance(),
                    LinkMode::Reciprocal => {
                        let (mut sum, mut n) = (0.0, 0);
                        for b in [forward, self.buffer(l.b, l.a)] {
                            if b.len() >= 2 {
                                sum += b.variance();
                                n += 1;
                            }
                        }
                        if n == 0 {
                            0.0
                        } else {
                            sum / n as f64
                        }
                    }
                }
            })
            .collect()
    }

    /// True while some link of `index` has not yet filled a buffer in any
    /// direction.
    pub fn warming_up(&self, index: &LinkIndex) -> bool {
        index.links().iter().any(|l| {
            let full_fwd = self.buffer(l.a, l.b).is_full();
            match index.mode() {
                LinkMode::Directed => !full_fwd,
                LinkMode::Reciprocal => !(full_fwd || self.buffer(l.b, l.a).is_full()),
            }
        })
    }
}
