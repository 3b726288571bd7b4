use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::ControlFlow;

pub(crate) type Adjacency = [Vec<(u32, f64)>];

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: u32,
}

impl Eq for Entry {}

impl Ord for Entry {
    // Min-heap on (dist, node).
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Resumable Dijkstra whose settled region can be grown by raising the cap.
///
/// Buffers are reused across searches; `epoch` invalidates the previous run
/// without clearing.
pub(crate) struct BoundedSearch {
    dist: Vec<f64>,
    seen: Vec<u32>,
    settled: Vec<u32>,
    epoch: u32,
    heap: BinaryHeap<Entry>,
}

impl BoundedSearch {
    pub fn new(n: usize) -> Self {
        Self {
            dist: vec![f64::INFINITY; n],
            seen: vec![0; n],
            settled: vec![0; n],
            epoch: 0,
            heap: BinaryHeap::new(),
        }
    }

    pub fn start(&mut self, source: u32) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.seen.fill(0);
            self.settled.fill(0);
            self.epoch = 1;
        }
        self.heap.clear();
        self.dist[source as usize] = 0.0;
        self.seen[source as usize] = self.epoch;
        self.heap.push(Entry { dist: 0.0, node: source });
    }

    #[inline]
    pub fn is_settled(&self, v: u32) -> bool {
        self.settled[v as usize] == self.epoch
    }

    /// Settles every node at distance `<= cap`, calling `visit(node, dist)`
    /// in nondecreasing distance order. Stops early when `visit` breaks.
    pub fn extend<F>(&mut self, adj: &Adjacency, cap: f64, mut visit: F)
    where
        F: FnMut(u32, f64) -> ControlFlow<()>,
    {
        while let Some(&Entry { dist, node }) = self.heap.peek() {
            if dist > cap {
                break;
            }
            self.heap.pop();
            let v = node as usize;
            if self.settled[v] == self.epoch || dist > self.dist[v] {
                continue;
            }
            self.settled[v] = self.epoch;
            for &(to, w) in &adj[v] {
                let t = to as usize;
                if self.settled[t] == self.epoch {
                    continue;
                }
                let nd = dist + w;
                if self.seen[t] != self.epoch || nd < self.dist[t] {
                    self.seen[t] = self.epoch;
                    self.dist[t] = nd;
                    self.heap.push(Entry { dist: nd, node: to });
                }
            }
            if visit(node, dist).is_break() {
                return;
            }
        }
    }
}
