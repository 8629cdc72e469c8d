use crate::geom::Point;

const LEAF: usize = 8;

#[derive(Debug, Clone, PartialEq)]
struct Node {
    lo: Point,
    hi: Point,
    min_rank: usize,
    /// Children, or a range of `items` for a leaf.
    kind: Kind,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Split(usize, usize),
    Leaf(usize, usize),
}

/// 2-d tree over points, each subtree remembering its smallest rank, for
/// "points of rank below k inside a box" queries.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedKdTree {
    nodes: Vec<Node>,
    items: Vec<(Point, usize, usize)>,
}

/// Axis-aligned square given by centre and half side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Square {
    pub center: Point,
    pub half: f64,
}

impl Square {
    pub fn new(center: Point, half: f64) -> Self {
        Square { center, half }
    }

    pub fn contains(&self, p: Point) -> bool {
        (p.x - self.center.x).abs() <= self.half && (p.y - self.center.y).abs() <= self.half
    }

    /// Square with the same centre and `factor` times the side.
    pub fn scaled(&self, factor: f64) -> Square {
        Square {
            center: self.center,
            half: self.half * factor,
        }
    }
}

impl RankedKdTree {
    /// `pts[i] = (position, id, rank)`.
    pub fn build(pts: Vec<(Point, usize, usize)>) -> Self {
        let mut t = RankedKdTree {
            nodes: Vec::new(),
            items: pts,
        };
        if !t.items.is_empty() {
            let n = t.items.len();
            t.build_rec(0, n);
        }
        t
    }

    fn build_rec(&mut self, a: usize, b: usize) -> usize {
        let slice = &mut self.items[a..b];
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut min_rank = usize::MAX;
        for (p, _, r) in slice.iter() {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
            min_rank = min_rank.min(*r);
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            lo,
            hi,
            min_rank,
            kind: Kind::Leaf(a, b),
        });
        if b - a > LEAF {
            let by_x = (hi.x - lo.x) >= (hi.y - lo.y);
            slice.sort_by(|p, q| {
                let (u, v) = if by_x { (p.0.x, q.0.x) } else { (p.0.y, q.0.y) };
                u.total_cmp(&v).then(p.1.cmp(&q.1))
            });
            let mid = a + (b - a) / 2;
            let l = self.build_rec(a, mid);
            let r = self.build_rec(mid, b);
            self.nodes[id].kind = Kind::Split(l, r);
        }
        id
    }

    /// Ids of points inside `sq` with rank below `max_rank`, sorted by id.
    pub fn query(&self, sq: &Square, max_rank: usize) -> Vec<usize> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let n = &self.nodes[i];
            if n.min_rank >= max_rank
                || n.hi.x < sq.center.x - sq.half
                || n.lo.x > sq.center.x + sq.half
                || n.hi.y < sq.center.y - sq.half
                || n.lo.y > sq.center.y + sq.half
            {
                continue;
            }
            match n.kind {
                Kind::Split(l, r) => {
                    stack.push(l);
                    stack.push(r);
                }
                Kind::Leaf(a, b) => {
                    out.extend(
                        self.items[a..b]
                            .iter()
                            .filter(|(p, _, r)| *r < max_rank && sq.contains(*p))
                            .map(|x| x.1),
                    );
                }
            }
        }
        out.sort_unstable();
        out
    }
}
