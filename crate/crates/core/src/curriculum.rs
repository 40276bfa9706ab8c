//! Syllabus enumeration and the syllabus catalog.
//!
//! A syllabus is a square max-pool kernel applied a number of times before the
//! result is resized back to the target size. The catalog lists the distinct
//! syllabuses for a target, sorted from the coarsest (densest after dilation)
//! to the identity syllabus, which leaves the ground truth untouched.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::depth::{DepthMap, TargetSize};
use crate::dilation::dilate;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SyllabusSpec {
    /// Number of pooling passes; 0 for the identity syllabus.
    pub iterations: u32,
    /// Square kernel side; `None` for the identity syllabus.
    pub kernel: Option<usize>,
    /// Raster size after pooling, before resizing back to the target.
    pub pooled: TargetSize,
}

/// Size after `iterations` successive non-overlapping pools, or `None` once a
/// dimension reaches zero.
pub fn pooled_size(target: TargetSize, iterations: u32, kernel: usize) -> Option<TargetSize> {
    let (mut h, mut w) = (target.height, target.width);
    for _ in 0..iterations {
        h /= kernel;
        w /= kernel;
        if h == 0 || w == 0 {
            return None;
        }
    }
    Some(TargetSize {
        height: h,
        width: w,
    })
}

impl SyllabusSpec {
    pub fn new(iterations: u32, kernel: usize, target: TargetSize) -> Result<Self> {
        if iterations == 0 || kernel < 2 {
            return Err(Error::InvalidParameter(format!(
                "syllabus needs iterations >= 1 and kernel >= 2, got {iterations} x {kernel}"
            )));
        }
        let pooled = pooled_size(target, iterations, kernel).ok_or(Error::DegeneratePool {
            kernel_h: kernel,
            kernel_w: kernel,
            height: target.height,
            width: target.width,
        })?;
        Ok(Self {
            iterations,
            kernel: Some(kernel),
            pooled,
        })
    }

    pub fn identity(target: TargetSize) -> Self {
        Self {
            iterations: 0,
            kernel: None,
            pooled: target,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.kernel.is_none()
    }

    /// `iterations x (k,k)`, with `0x(0,0)` for the identity.
    pub fn label(&self) -> String {
        let k = self.kernel.unwrap_or(0);
        format!("{}x({k},{k})", self.iterations)
    }

    /// Recomputes the pooled size from `(iterations, kernel)` for `target`.
    pub fn recompute(&self, target: TargetSize) -> Option<TargetSize> {
        match self.kernel {
            None => Some(target),
            Some(k) => pooled_size(target, self.iterations, k),
        }
    }
}

/// Named curriculum a catalog entry belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Membership {
    A,
    B,
    C,
    /// Always included (the identity syllabus).
    #[serde(rename = "*")]
    Always,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub index: usize,
    pub syllabus: SyllabusSpec,
    pub members: Vec<Membership>,
}

impl CatalogEntry {
    pub fn is_member(&self, set: Membership) -> bool {
        self.members.contains(&set) || self.members.contains(&Membership::Always)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Catalog {
    pub target: TargetSize,
    pub entries: Vec<CatalogEntry>,
}

/// Syllabus table for a 256x512 target: (iterations, kernel, pooled h, pooled
/// w, memberships). The identity row follows as index 30.
const TABLE_256X512: [(u32, usize, usize, usize, &[Membership]); 30] = {
    use Membership::{A, B, C};
    [
        (8, 2, 1, 2, &[]),
        (7, 2, 2, 4, &[]),
        (4, 3, 3, 6, &[A, B]),
        (6, 2, 4, 8, &[]),
        (2, 7, 5, 10, &[B]),
        (1, 37, 6, 13, &[A]),
        (2, 6, 7, 14, &[B, C]),
        (5, 2, 8, 16, &[]),
        (3, 3, 9, 18, &[A, B]),
        (2, 5, 10, 20, &[C]),
        (1, 22, 11, 23, &[B]),
        (1, 20, 12, 25, &[A]),
        (1, 19, 13, 26, &[B, C]),
        (1, 18, 14, 28, &[]),
        (1, 17, 15, 30, &[A, B]),
        (4, 2, 16, 32, &[]),
        (1, 15, 17, 34, &[B, C]),
        (1, 14, 18, 36, &[A]),
        (1, 13, 19, 39, &[B]),
        (1, 12, 21, 42, &[B]),
        (1, 11, 23, 46, &[A, B, C]),
        (1, 10, 25, 51, &[]),
        (2, 3, 28, 56, &[B]),
        (3, 2, 32, 64, &[A]),
        (1, 7, 36, 73, &[B, C]),
        (1, 6, 42, 85, &[A]),
        (1, 5, 51, 102, &[B]),
        (2, 2, 64, 128, &[C]),
        (1, 3, 85, 170, &[A, B, C]),
        (1, 2, 128, 256, &[C]),
    ]
};

pub const DEFAULT_TARGET: TargetSize = TargetSize {
    height: 256,
    width: 512,
};

/// Catalog sizes of the named curricula (identity included).
pub const CURRICULUM_SIZES: [(Membership, usize); 3] = [(Membership::A, 11), (Membership::B, 16), (Membership::C, 10)];

/// The 31-entry 256x512 syllabus table, shipped as literal data.
pub fn canonical_catalog_256x512() -> Catalog {
    let mut entries: Vec<CatalogEntry> = TABLE_256X512
        .iter()
        .enumerate()
        .map(|(index, &(iterations, kernel, h, w, members))| CatalogEntry {
            index,
            syllabus: SyllabusSpec {
                iterations,
                kernel: Some(kernel),
                pooled: TargetSize {
                    height: h,
                    width: w,
                },
            },
            members: members.to_vec(),
        })
        .collect();
    entries.push(CatalogEntry {
        index: entries.len(),
        syllabus: SyllabusSpec::identity(DEFAULT_TARGET),
        members: vec![Membership::Always],
    });
    Catalog {
        target: DEFAULT_TARGET,
        entries,
    }
}

/// Enumerates the distinct syllabuses for `target`.
///
/// Kernels `k` in `[2, m]` are swept in ascending order, and for each kernel
/// iterations `i` in `[1, floor(log2 m)]` ascending, where `m` is the shorter
/// target side. Candidates are keyed by their pooled extent along the shorter
/// side and the first candidate seen for a key is kept. The identity syllabus
/// is appended and entries are sorted by pooled area (ties by height).
pub fn enumerate_syllabuses(target: TargetSize) -> Result<Catalog> {
    if target.height < 2 || target.width < 2 {
        return Err(Error::InvalidTarget {
            height: target.height,
            width: target.width,
            reason: "enumeration needs at least 2x2",
        });
    }
    let m = target.height.min(target.width);
    let max_iterations = m.ilog2();
    let key = |s: TargetSize| if target.height <= target.width { s.height } else { s.width };
    let mut seen = HashSet::new();
    let mut syllabuses = Vec::new();
    for kernel in 2..=m {
        for iterations in 1..=max_iterations {
            let Some(pooled) = pooled_size(target, iterations, kernel) else {
                break;
            };
            if seen.insert(key(pooled)) {
                syllabuses.push(SyllabusSpec {
                    iterations,
                    kernel: Some(kernel),
                    pooled,
                });
            }
        }
    }
    syllabuses.sort_by_key(|s| (s.pooled.area(), s.pooled.height));
    syllabuses.push(SyllabusSpec::identity(target));

    let mut entries: Vec<CatalogEntry> = syllabuses
        .into_iter()
        .enumerate()
        .map(|(index, syllabus)| CatalogEntry {
            index,
            syllabus,
            members: Vec::new(),
        })
        .collect();
    assign_memberships(target, &mut entries);
    Ok(Catalog { target, entries })
}

fn assign_memberships(target: TargetSize, entries: &mut [CatalogEntry]) {
    let canonical = canonical_catalog_256x512();
    let matches_table = target == DEFAULT_TARGET
        && entries.len() == canonical.entries.len()
        && entries
            .iter()
            .zip(&canonical.entries)
            .all(|(a, b)| a.syllabus.pooled == b.syllabus.pooled);
    if matches_table {
        for (e, c) in entries.iter_mut().zip(canonical.entries) {
            e.members = c.members;
        }
        return;
    }
    let last = entries.len() - 1;
    entries[last].members = vec![Membership::Always];
    for (set, size) in CURRICULUM_SIZES {
        for i in evenly_spaced(last, size - 1) {
            entries[i].members.push(set);
        }
    }
}

/// `count` indices spread evenly over `0..n`, first and last included.
fn evenly_spaced(n: usize, count: usize) -> Vec<usize> {
    if count >= n {
        return (0..n).collect();
    }
    if count == 1 {
        return vec![n - 1];
    }
    let mut out: Vec<usize> = (0..count)
        .map(|j| ((j * (n - 1)) as f64 / (count - 1) as f64).round() as usize)
        .collect();
    out.dedup();
    out
}

impl Catalog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> Result<&CatalogEntry> {
        self.entries.get(index).ok_or(Error::IndexOutOfRange {
            index,
            len: self.entries.len(),
        })
    }

    pub fn identity_index(&self) -> Option<usize> {
        self.entries.iter().rposition(|e| e.syllabus.is_identity())
    }

    pub fn pooled_sizes(&self) -> Vec<TargetSize> {
        self.entries.iter().map(|e| e.syllabus.pooled).collect()
    }

    /// Structural checks: indices in order, areas strictly increasing, the
    /// identity last, and every pooled size reproducible from its
    /// `(iterations, kernel)` pair. Returns one message per failing row.
    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut problems = Vec::new();
        for (pos, e) in self.entries.iter().enumerate() {
            if e.index != pos {
                problems.push(format!("row {pos}: index field is {}", e.index));
            }
            match e.syllabus.recompute(self.target) {
                Some(s) if s == e.syllabus.pooled => {}
                other => problems.push(format!(
                    "row {pos}: {} gives {:?}, table says {}",
                    e.syllabus.label(),
                    other.map(|s| s.to_string()),
                    e.syllabus.pooled
                )),
            }
            if pos > 0 && self.entries[pos - 1].syllabus.pooled.area() >= e.syllabus.pooled.area() {
                problems.push(format!("row {pos}: pooled area not strictly increasing"));
            }
        }
        if self.identity_index() != Some(self.entries.len().saturating_sub(1)) {
            problems.push("identity syllabus is not the last entry".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems)
        }
    }

    pub fn members_of(&self, set: Membership) -> Vec<usize> {
        self.entries
            .iter()
            .filter(|e| e.is_member(set))
            .map(|e| e.index)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurriculumName {
    A,
    B,
    C,
    Full,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selection {
    Named(CurriculumName),
    /// Identity syllabus only: plain training on the original ground truth.
    Baseline,
    Indices(Vec<usize>),
}

impl std::str::FromStr for Selection {
    type Err = Error;

    /// `A`, `B`, `C`, `full`, `none`, or a comma-separated index list.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "A" | "a" => Selection::Named(CurriculumName::A),
            "B" | "b" => Selection::Named(CurriculumName::B),
            "C" | "c" => Selection::Named(CurriculumName::C),
            "full" => Selection::Named(CurriculumName::Full),
            "none" | "baseline" => Selection::Baseline,
            list => Selection::Indices(
                list.split(',')
                    .map(|t| t.trim().parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::InvalidParameter(format!("unknown curriculum {s:?}")))?,
            ),
        })
    }
}

/// Ordered sublist of the catalog. The identity syllabus is appended when the
/// selection leaves it out.
pub fn select_curriculum(catalog: &Catalog, selection: &Selection) -> Result<Vec<CatalogEntry>> {
    let mut indices: Vec<usize> = match selection {
        Selection::Named(CurriculumName::Full) => (0..catalog.len()).collect(),
        Selection::Named(name) => {
            let set = match name {
                CurriculumName::A => Membership::A,
                CurriculumName::B => Membership::B,
                _ => Membership::C,
            };
            catalog.members_of(set)
        }
        Selection::Baseline => Vec::new(),
        Selection::Indices(list) => {
            if list.is_empty() {
                return Err(Error::EmptySelection);
            }
            for &i in list {
                catalog.get(i)?;
            }
            list.clone()
        }
    };
    indices.sort_unstable();
    indices.dedup();
    if let Some(id) = catalog.identity_index() {
        if !indices.contains(&id) {
            indices.push(id);
        }
    }
    if indices.is_empty() {
        return Err(Error::EmptySelection);
    }
    Ok(indices.into_iter().map(|i| catalog.entries[i].clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub index: usize,
    pub iterations: u32,
    /// Kernel side, 0 for the identity syllabus.
    pub kernel: usize,
    pub density: f64,
}

/// Density of the dilated map for every catalog entry.
pub fn density_profile(map: &DepthMap, catalog: &Catalog, size: TargetSize) -> Result<Vec<DensityPoint>> {
    catalog
        .entries
        .iter()
        .map(|e| {
            Ok(DensityPoint {
                index: e.index,
                iterations: e.syllabus.iterations,
                kernel: e.syllabus.kernel.unwrap_or(0),
                density: dilate(map, &e.syllabus, size)?.density(),
            })
        })
        .collect()
}

pub fn write_density_csv<W: Write>(points: &[DensityPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush().map_err(|e| Error::io("<density csv>", e))?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct CatalogFile {
    target: [usize; 2],
    entries: Vec<EntryFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EntryFile {
    index: usize,
    iterations: u32,
    kernel: Option<[usize; 2]>,
    pooled: [usize; 2],
    member: Vec<Membership>,
}

impl Catalog {
    pub fn to_json(&self) -> Result<String> {
        let file = CatalogFile {
            target: [self.target.height, self.target.width],
            entries: self
                .entries
                .iter()
                .map(|e| EntryFile {
                    index: e.index,
                    iterations: e.syllabus.iterations,
                    kernel: e.syllabus.kernel.map(|k| [k, k]),
                    pooled: [e.syllabus.pooled.height, e.syllabus.pooled.width],
                    member: e.members.clone(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    /// Parses and validates a catalog. Rows whose pooled size does not follow
    /// from their `(iterations, kernel)` pair are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: CatalogFile = serde_json::from_str(text)?;
        let target = TargetSize::new(file.target[0], file.target[1])?;
        let mut entries = Vec::with_capacity(file.entries.len());
        for e in file.entries {
            let kernel = match e.kernel {
                None => None,
                Some([kh, kw]) if kh == kw => Some(kh),
                Some([kh, kw]) => {
                    return Err(Error::InvalidParameter(format!(
                        "catalog row {}: kernel ({kh},{kw}) is not square",
                        e.index
                    )))
                }
            };
            entries.push(CatalogEntry {
                index: e.index,
                syllabus: SyllabusSpec {
                    iterations: e.iterations,
                    kernel,
                    pooled: TargetSize::new(e.pooled[0], e.pooled[1])?,
                },
                members: e.member,
            });
        }
        let catalog = Catalog { target, entries };
        catalog
            .validate()
            .map_err(|p| Error::InvalidParameter(format!("catalog rejected: {}", p.join("; "))))?;
        Ok(catalog)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
