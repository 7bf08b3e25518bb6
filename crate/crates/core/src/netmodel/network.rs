use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lu::ComplexLu;
use super::model::{Conductor, SectionModel, Track};
use crate::error::{Error, Result};
use crate::features::InjectionMode;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum End {
    Emitter,
    Receiver,
}

/// Role of a two-terminal branch in the assembled system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BranchTag {
    /// Ideal source feeding an emitter bus (+ side for track 1 or the
    /// independent track's external rail).
    Source { bus: usize },
    /// Source impedance between an emitter bus (or ground) and a rail.
    Emitter(Conductor),
    /// Receiver impedance between a rail and a receiver bus.
    Receiver(Conductor),
    /// Receiver bus to ground.
    ReceiverGround { bus: usize },
}

/// A branch obeying `V[a] - V[b] - z·I = emf`, with `I` flowing from `a` to
/// `b` through the branch. `None` is the ground reference.
#[derive(Debug, Clone, Copy)]
pub struct Branch {
    pub a: Option<usize>,
    pub b: Option<usize>,
    pub z: Complex64,
    pub emf: Complex64,
    pub tag: BranchTag,
}

/// Modified-nodal-analysis system: node admittances plus one current
/// unknown per branch. The matrix is complex symmetric (reciprocal network).
#[derive(Debug, Clone)]
pub struct NetworkSystem {
    pub node_names: Vec<String>,
    pub branches: Vec<Branch>,
    /// Row-major, dimension `nodes + branches`.
    pub matrix: Vec<Complex64>,
    lu: ComplexLu,
}

/// The eight measured currents: emitter-side current injected into each rail
/// and receiver-side current leaving each rail, in conductor order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RailCurrents {
    pub emitter: [Complex64; 4],
    pub receiver: [Complex64; 4],
    /// Complex power delivered by the ideal sources.
    pub source_power: Complex64,
}

impl RailCurrents {
    pub fn get(&self, end: End, c: Conductor) -> Complex64 {
        match end {
            End::Emitter => self.emitter[c.index()],
            End::Receiver => self.receiver[c.index()],
        }
    }

    /// Currents seen after exchanging the two tracks.
    pub fn mirrored(&self) -> Self {
        let flip = |a: [Complex64; 4]| [a[3], a[2], a[1], a[0]];
        Self {
            emitter: flip(self.emitter),
            receiver: flip(self.receiver),
            source_power: self.source_power,
        }
    }

    pub fn magnitudes(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        for k in 0..4 {
            out[k] = self.emitter[k].norm();
            out[4 + k] = self.receiver[k].norm();
        }
        out
    }
}

struct Builder {
    names: Vec<String>,
    index: HashMap<String, usize>,
    y: HashMap<(usize, usize), Complex64>,
    branches: Vec<Branch>,
    // Conductive links for the floating-node check.
    links: Vec<(usize, Option<usize>)>,
}

impl Builder {
    fn new() -> Self {
        Self {
            names: Vec::new(),
            index: HashMap::new(),
            y: HashMap::new(),
            branches: Vec::new(),
            links: Vec::new(),
        }
    }

    fn node(&mut self, name: String) -> usize {
        if let Some(&i) = self.index.get(&name) {
            return i;
        }
        let i = self.names.len();
        self.index.insert(name.clone(), i);
        self.names.push(name);
        i
    }

    fn add_y(&mut self, i: usize, j: usize, v: Complex64) {
        *self.y.entry((i, j)).or_insert(ZERO) += v;
    }

    fn shunt(&mut self, a: usize, b: Option<usize>, y: Complex64) {
        if y == ZERO {
            return;
        }
        self.add_y(a, a, y);
        if let Some(b) = b {
            self.add_y(b, b, y);
            self.add_y(a, b, -y);
            self.add_y(b, a, -y);
        }
        self.links.push((a, b));
    }

    fn branch(&mut self, a: Option<usize>, b: Option<usize>, z: Complex64, emf: Complex64, tag: BranchTag) {
        match (a, b) {
            (Some(a), b) => self.links.push((a, b)),
            (None, Some(b)) => self.links.push((b, None)),
            (None, None) => {}
        }
        self.branches.push(Branch { a, b, z, emf, tag });
    }
}

/// Nodes with no conductive path to ground, grouped by component.
fn floating_nodes(n: usize, links: &[(usize, Option<usize>)]) -> Vec<usize> {
    // Union-find with ground as element n.
    let mut parent: Vec<usize> = (0..=n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(a, b) in links {
        let ra = find(&mut parent, a);
        let rb = find(&mut parent, b.unwrap_or(n));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    let g = find(&mut parent, n);
    (0..n).filter(|&i| find(&mut parent, i) != g).collect()
}

fn rail_node_name(c: Conductor, k: usize, side: Option<char>) -> String {
    match side {
        Some(s) => format!("{c}@{k}{s}"),
        None => format!("{c}@{k}"),
    }
}

/// Assembles the MNA system for a section under the given injection.
pub fn build_admittance(model: &SectionModel, injection: InjectionMode) -> Result<NetworkSystem> {
    model.validate()?;
    injection.validate()?;
    let omega = model.omega();
    let j = Complex64::i();

    let last = model.segments.len() * model.sections_per_segment;
    let mut split = [None::<usize>; 4];
    for b in &model.breakages {
        split[b.conductor().index()] = Some(model.breakage_boundary(b)?);
    }

    let mut bld = Builder::new();
    // Node on conductor c at boundary k, seen from the section on `side`
    // ('L' = section ending at k, 'R' = section starting at k).
    let rail_node = |bld: &mut Builder, c: Conductor, k: usize, side: char| {
        let s = (split[c.index()] == Some(k)).then_some(side);
        bld.node(rail_node_name(c, k, s))
    };

    let mut k = 0;
    for seg in &model.segments {
        let dx = seg.length_km / model.sections_per_segment as f64;
        let lmat = seg.inductance_matrix();
        let mut z = [[ZERO; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                let r = if a == b { seg.r_per_km } else { 0.0 };
                z[a][b] = (r + j * omega * lmat[a][b]) * dx;
            }
        }
        let y = invert4(&z)?;
        let y_rr = (seg.g_rail_rail_per_km + j * omega * seg.c_rail_rail_per_km) * dx / 2.0;
        let y_rg = (seg.g_rail_gnd_per_km + j * omega * seg.c_rail_gnd_per_km) * dx / 2.0;
        for _ in 0..model.sections_per_segment {
            let left: Vec<usize> = Conductor::ALL.iter().map(|&c| rail_node(&mut bld, c, k, 'R')).collect();
            let right: Vec<usize> =
                Conductor::ALL.iter().map(|&c| rail_node(&mut bld, c, k + 1, 'L')).collect();
            for a in 0..4 {
                for b in 0..4 {
                    bld.add_y(left[a], left[b], y[a][b]);
                    bld.add_y(right[a], right[b], y[a][b]);
                    bld.add_y(left[a], right[b], -y[a][b]);
                    bld.add_y(right[a], left[b], -y[a][b]);
                }
                bld.links.push((left[a], Some(right[a])));
            }
            for ends in [&left, &right] {
                bld.shunt(ends[0], Some(ends[1]), y_rr);
                bld.shunt(ends[2], Some(ends[3]), y_rr);
                for &n in ends.iter() {
                    bld.shunt(n, None, y_rg);
                }
            }
            k += 1;
        }
    }
    debug_assert_eq!(k, last);

    let half = Complex64::new(model.source.emf_volts / 2.0, 0.0);
    let zs = model.source.impedance_ohm;
    let zt = model.termination_ohm;
    let emitter = |bld: &mut Builder, bus: Option<usize>, c: Conductor| {
        let rail = rail_node(bld, c, 0, 'R');
        bld.branch(bus, Some(rail), zs, ZERO, BranchTag::Emitter(c));
    };
    let receiver = |bld: &mut Builder, c: Conductor, bus: usize| {
        let rail = rail_node(bld, c, last, 'L');
        bld.branch(Some(rail), Some(bus), zt, ZERO, BranchTag::Receiver(c));
    };
    let receiver_bus = |bld: &mut Builder, name: &str, id: usize| {
        let bus = bld.node(name.to_string());
        if let Some(zg) = model.receiver_ground_ohm {
            bld.branch(Some(bus), None, zg, ZERO, BranchTag::ReceiverGround { bus: id });
        }
        bus
    };

    match injection {
        InjectionMode::Joint => {
            let hot = bld.node("bus:H".into());
            let cold = bld.node("bus:C".into());
            bld.branch(Some(hot), None, ZERO, half, BranchTag::Source { bus: 0 });
            bld.branch(None, Some(cold), ZERO, half, BranchTag::Source { bus: 1 });
            for c in Conductor::ALL {
                emitter(&mut bld, Some(if c.track == Track::One { hot } else { cold }), c);
            }
            let rb = receiver_bus(&mut bld, "bus:R", 0);
            for c in Conductor::ALL {
                receiver(&mut bld, c, rb);
            }
        }
        InjectionMode::Independent(driven) => {
            for track in Track::ALL {
                let [ce, ci] = track_conductors(track);
                if track == driven {
                    let hot = bld.node(format!("bus:H{}", track.number()));
                    let cold = bld.node(format!("bus:C{}", track.number()));
                    bld.branch(Some(hot), None, ZERO, half, BranchTag::Source { bus: 0 });
                    bld.branch(None, Some(cold), ZERO, half, BranchTag::Source { bus: 1 });
                    emitter(&mut bld, Some(hot), ce);
                    emitter(&mut bld, Some(cold), ci);
                } else {
                    emitter(&mut bld, None, ce);
                    emitter(&mut bld, None, ci);
                }
                let id = usize::from(track.number() - 1);
                let rb = receiver_bus(&mut bld, &format!("bus:R{}", track.number()), id);
                receiver(&mut bld, ce, rb);
                receiver(&mut bld, ci, rb);
            }
        }
    }

    let n = bld.names.len();
    let floating = floating_nodes(n, &bld.links);
    if !floating.is_empty() {
        return Err(Error::FloatingSubnetwork {
            nodes: floating.into_iter().map(|i| bld.names[i].clone()).collect(),
        });
    }

    let dim = n + bld.branches.len();
    let mut matrix = vec![ZERO; dim * dim];
    for (&(r, c), &v) in &bld.y {
        matrix[r * dim + c] += v;
    }
    for (idx, br) in bld.branches.iter().enumerate() {
        let row = n + idx;
        if let Some(a) = br.a {
            matrix[a * dim + row] += 1.0;
            matrix[row * dim + a] += 1.0;
        }
        if let Some(b) = br.b {
            matrix[b * dim + row] -= 1.0;
            matrix[row * dim + b] -= 1.0;
        }
        matrix[row * dim + row] = -br.z;
    }
    let lu = ComplexLu::factor(dim, matrix.clone())?;
    Ok(NetworkSystem {
        node_names: bld.names,
        branches: bld.branches,
        matrix,
        lu,
    })
}

/// External and internal conductor of a track.
pub fn track_conductors(t: Track) -> [Conductor; 2] {
    use super::model::Rail;
    [Conductor::new(t, Rail::External), Conductor::new(t, Rail::Internal)]
}

impl NetworkSystem {
    pub fn node_count(&self) -> usize {
        self.node_names.len()
    }

    pub fn dimension(&self) -> usize {
        self.node_count() + self.branches.len()
    }

    pub fn branch_index(&self, tag: BranchTag) -> Option<usize> {
        self.branches.iter().position(|b| b.tag == tag)
    }

    pub fn condition_estimate(&self) -> f64 {
        self.lu.pivot_ratio
    }

    /// Branch currents with the built-in source EMFs.
    pub fn solve(&self) -> Vec<Complex64> {
        let emfs: Vec<Complex64> = self.branches.iter().map(|b| b.emf).collect();
        self.solve_with_emf(&emfs)
    }

    /// Branch currents when branch `k` carries EMF `emfs[k]` (all others
    /// zero). Used for superposition and reciprocity checks.
    pub fn solve_with_emf(&self, emfs: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(emfs.len(), self.branches.len());
        let n = self.node_count();
        let mut rhs = vec![ZERO; self.dimension()];
        rhs[n..].copy_from_slice(emfs);
        let x = self.lu.solve(&rhs);
        x[n..].to_vec()
    }

    pub fn node_voltages(&self) -> Vec<Complex64> {
        let n = self.node_count();
        let mut rhs = vec![ZERO; self.dimension()];
        for (k, b) in self.branches.iter().enumerate() {
            rhs[n + k] = b.emf;
        }
        let mut x = self.lu.solve(&rhs);
        x.truncate(n);
        x
    }

    pub fn rail_currents(&self, branch_currents: &[Complex64]) -> RailCurrents {
        let mut out = RailCurrents {
            emitter: [ZERO; 4],
            receiver: [ZERO; 4],
            source_power: ZERO,
        };
        for (b, &i) in self.branches.iter().zip(branch_currents) {
            match b.tag {
                BranchTag::Emitter(c) => out.emitter[c.index()] = i,
                BranchTag::Receiver(c) => out.receiver[c.index()] = i,
                BranchTag::Source { .. } => out.source_power -= b.emf * i.conj(),
                BranchTag::ReceiverGround { .. } => {}
            }
        }
        out
    }
}

/// Solves the section and returns the eight measured rail currents.
pub fn solve_currents(model: &SectionModel, injection: InjectionMode) -> Result<RailCurrents> {
    let sys = build_admittance(model, injection)?;
    Ok(sys.rail_currents(&sys.solve()))
}

/// Gauss-Jordan inverse of a 4×4 complex matrix.
fn invert4(m: &[[Complex64; 4]; 4]) -> Result<[[Complex64; 4]; 4]> {
    let mut a = *m;
    let mut inv = [[ZERO; 4]; 4];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = Complex64::new(1.0, 0.0);
    }
    let scale = m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    for col in 0..4 {
        let p = (col..4)
            .max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm()))
            .unwrap_or(col);
        let mag = a[p][col].norm();
        if !(mag > super::lu::PIVOT_TOLERANCE * scale) {
            return Err(Error::IllConditioned {
                pivot: mag,
                condition: f64::INFINITY,
            });
        }
        a.swap(col, p);
        inv.swap(col, p);
        let d = a[col][col];
        for k in 0..4 {
            a[col][k] /= d;
            inv[col][k] /= d;
        }
        for r in 0..4 {
            if r != col {
                let f = a[r][col];
                for k in 0..4 {
                    let (ac, ic) = (a[col][k], inv[col][k]);
                    a[r][k] -= f * ac;
                    inv[r][k] -= f * ic;
                }
            }
        }
    }
    Ok(inv)
}
