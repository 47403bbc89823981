//! JSON and CSV interchange.
//!
//! Matrices are `{"rows", "cols", "re", "im"}` with row-major entries;
//! graded objects map level strings `"0".."N"` to matrices.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::deform::DeformationFamily;
use crate::error::{Error, Result};
use crate::interacting::{squeezing_of, InteractingSpace, Squeezing};
use crate::linalg::{CMat, CVec, C64};
use crate::subproduct::ProjectionFamily;
use crate::tensor::TruncatedFockSpace;
use crate::Tolerances;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct JsonMatrix {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&CMat> for JsonMatrix {
    fn from(m: &CMat) -> Self {
        let (rows, cols) = m.shape();
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        JsonMatrix { rows, cols, re, im }
    }
}

impl JsonMatrix {
    pub fn to_matrix(&self) -> Result<CMat> {
        let n = self.rows * self.cols;
        if self.re.len() != n || self.im.len() != n {
            return Err(Error::Dimension(format!(
                "matrix {}x{} carries {} real and {} imaginary entries",
                self.rows,
                self.cols,
                self.re.len(),
                self.im.len()
            )));
        }
        Ok(CMat::from_fn(self.rows, self.cols, |i, j| {
            let k = i * self.cols + j;
            C64::new(self.re[k], self.im[k])
        }))
    }
}

/// Level-indexed matrices, serialized with keys in numeric order.
#[derive(Debug, Clone, PartialEq)]
pub struct Graded(pub Vec<JsonMatrix>);

impl Graded {
    pub fn from_levels(levels: &[CMat]) -> Self {
        Graded(levels.iter().map(JsonMatrix::from).collect())
    }

    pub fn to_levels(&self) -> Result<Vec<CMat>> {
        self.0.iter().map(JsonMatrix::to_matrix).collect()
    }
}

impl Serialize for Graded {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (n, m) in self.0.iter().enumerate() {
            map.serialize_entry(&n.to_string(), m)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Graded {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = BTreeMap::<String, JsonMatrix>::deserialize(d)?;
        let mut keyed: BTreeMap<usize, JsonMatrix> = BTreeMap::new();
        for (k, v) in raw {
            let n: usize = k.parse().map_err(|_| D::Error::custom(format!("bad level key {k:?}")))?;
            keyed.insert(n, v);
        }
        if keyed.keys().enumerate().any(|(i, &n)| i != n) {
            return Err(D::Error::custom("levels must be 0..N without gaps"));
        }
        Ok(Graded(keyed.into_values().collect()))
    }
}

/// A vector given as `{"re", "im"}` or as a plain array of reals.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JsonVector {
    Complex { re: Vec<f64>, im: Vec<f64> },
    Real(Vec<f64>),
}

impl JsonVector {
    pub fn to_vector(&self) -> Result<CVec> {
        match self {
            JsonVector::Real(re) => Ok(CVec::from_iterator(re.len(), re.iter().map(|&x| C64::new(x, 0.0)))),
            JsonVector::Complex { re, im } => {
                if re.len() != im.len() {
                    return Err(Error::Dimension("vector re/im lengths differ".into()));
                }
                Ok(CVec::from_iterator(re.len(), re.iter().zip(im).map(|(&a, &b)| C64::new(a, b))))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyFile {
    pub kind: String,
    pub d: usize,
    #[serde(rename = "N")]
    pub cutoff: usize,
    pub levels: Graded,
}

impl FamilyFile {
    pub fn deformation(f: &DeformationFamily) -> Self {
        FamilyFile {
            kind: "deformation".into(),
            d: f.space().dim(),
            cutoff: f.space().cutoff(),
            levels: Graded::from_levels(f.levels()),
        }
    }

    pub fn projections(f: &ProjectionFamily) -> Self {
        FamilyFile {
            kind: "projection".into(),
            d: f.space().dim(),
            cutoff: f.space().cutoff(),
            levels: Graded::from_levels(f.levels()),
        }
    }

    pub fn squeezing(k: &Squeezing) -> Self {
        FamilyFile {
            kind: "squeezing".into(),
            d: k.dim(),
            cutoff: k.cutoff(),
            levels: Graded::from_levels(k.levels()),
        }
    }

    fn space(&self) -> Result<TruncatedFockSpace> {
        TruncatedFockSpace::new(self.d, self.cutoff)
    }

    pub fn to_deformation(&self) -> Result<DeformationFamily> {
        DeformationFamily::new(self.space()?, self.levels.to_levels()?)
    }

    pub fn to_projections(&self) -> Result<ProjectionFamily> {
        ProjectionFamily::new(self.space()?, self.levels.to_levels()?)
    }

    pub fn to_squeezing(&self) -> Result<Squeezing> {
        Squeezing::new(self.d, self.levels.to_levels()?)
    }
}

/// A built space. Loading rebuilds from `L`; the remaining fields are output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpaceFile {
    pub d: usize,
    #[serde(rename = "N")]
    pub cutoff: usize,
    pub ranks: Vec<usize>,
    #[serde(rename = "L")]
    pub deformation: Graded,
    #[serde(rename = "Lambda")]
    pub quotient: Graded,
    pub xi: Graded,
    pub kappa: Graded,
    /// `creators[n][i]` is `a*(eᵢ)` from level `n` to `n+1`.
    pub creators: Vec<Vec<JsonMatrix>>,
}

impl SpaceFile {
    pub fn from_space(space: &InteractingSpace) -> Self {
        let n = space.cutoff();
        let levels = |f: &dyn Fn(usize) -> CMat| Graded((0..=n).map(|k| JsonMatrix::from(&f(k))).collect());
        SpaceFile {
            d: space.dim(),
            cutoff: n,
            ranks: space.ranks(),
            deformation: Graded::from_levels(space.family().levels()),
            quotient: levels(&|k| space.quotient(k).clone()),
            xi: levels(&|k| space.embedding(k).clone()),
            kappa: Graded::from_levels(squeezing_of(space).levels()),
            creators: (0..n)
                .map(|k| (0..space.dim()).map(|i| JsonMatrix::from(space.creator(k, i))).collect())
                .collect(),
        }
    }

    pub fn to_space(&self, tol: &Tolerances) -> Result<InteractingSpace> {
        let family = DeformationFamily::new(TruncatedFockSpace::new(self.d, self.cutoff)?, self.deformation.to_levels()?)?;
        let space = InteractingSpace::build(family, tol)?;
        if space.ranks() != self.ranks {
            return Err(Error::RankProfile(format!(
                "stored ranks {:?} differ from rebuilt {:?}",
                self.ranks,
                space.ranks()
            )));
        }
        Ok(space)
    }
}

/// Moments as a plain array or `{"moments": [...]}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MomentsFile {
    Plain(Vec<f64>),
    Wrapped { moments: Vec<f64> },
}

impl MomentsFile {
    pub fn into_moments(self) -> Vec<f64> {
        match self {
            MomentsFile::Plain(m) | MomentsFile::Wrapped { moments: m } => m,
        }
    }
}

/// Writes every float as `{:.16e}`, i.e. 17 significant digits.
#[derive(Debug, Clone, Copy, Default)]
pub struct SciFormatter {
    depth: usize,
    has_value: bool,
}

impl SciFormatter {
    fn indent<W: ?Sized + Write>(&self, w: &mut W) -> io::Result<()> {
        for _ in 0..self.depth {
            w.write_all(b"  ")?;
        }
        Ok(())
    }
}

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.depth += 1;
        self.has_value = false;
        w.write_all(b"[")
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.depth -= 1;
        if self.has_value {
            w.write_all(b"\n")?;
            self.indent(w)?;
        }
        w.write_all(b"]")
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        w.write_all(if first { b"\n" } else { b",\n" })?;
        self.indent(w)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, _w: &mut W) -> io::Result<()> {
        self.has_value = true;
        Ok(())
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.depth += 1;
        self.has_value = false;
        w.write_all(b"{")
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.depth -= 1;
        if self.has_value {
            w.write_all(b"\n")?;
            self.indent(w)?;
        }
        w.write_all(b"}")
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        w.write_all(if first { b"\n" } else { b",\n" })?;
        self.indent(w)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        w.write_all(b": ")
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, _w: &mut W) -> io::Result<()> {
        self.has_value = true;
        Ok(())
    }
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter::default());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json_string(value)?.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// A numeric table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|x| format!("{x:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deform::q_fock;
    use crate::linalg::max_abs_diff;

    #[test]
    fn matrix_round_trip_is_row_major() {
        let m = CMat::from_fn(2, 3, |i, j| C64::new((3 * i + j) as f64, -(j as f64)));
        let j = JsonMatrix::from(&m);
        assert_eq!(j.re, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(j.to_matrix().unwrap(), m);
        let bad = JsonMatrix { rows: 2, cols: 2, re: vec![0.0; 3], im: vec![0.0; 4] };
        assert!(bad.to_matrix().is_err());
    }

    #[test]
    fn graded_keys_are_numeric() {
        let levels: Vec<CMat> = (0..12).map(|_| CMat::identity(1, 1)).collect();
        let s = serde_json::to_string(&Graded::from_levels(&levels)).unwrap();
        assert!(s.find("\"2\"").unwrap() < s.find("\"10\"").unwrap());
        let back: Graded = serde_json::from_str(&s).unwrap();
        assert_eq!(back.0.len(), 12);
        let gap = r#"{"0": {"rows":1,"cols":1,"re":[1.0],"im":[0.0]}, "2": {"rows":1,"cols":1,"re":[1.0],"im":[0.0]}}"#;
        assert!(serde_json::from_str::<Graded>(gap).is_err());
    }

    #[test]
    fn floats_carry_seventeen_digits_and_round_trip() {
        let x = 0.1f64 + 0.2;
        let s = to_json_string(&vec![x, 1.0, -2.5e-300]).unwrap();
        assert!(s.contains("3.0000000000000004e-1"));
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![x, 1.0, -2.5e-300]);
    }

    #[test]
    fn family_and_space_round_trip() {
        let tol = Tolerances::default();
        let f = q_fock(TruncatedFockSpace::new(2, 3).unwrap(), 0.3).unwrap();
        let file = FamilyFile::deformation(&f);
        let text = to_json_string(&file).unwrap();
        let back: FamilyFile = serde_json::from_str(&text).unwrap();
        let g = back.to_deformation().unwrap();
        for n in 0..=3 {
            assert_eq!(f.level(n), g.level(n));
        }
        let sp = InteractingSpace::build(f, &tol).unwrap();
        let sf = SpaceFile::from_space(&sp);
        let text = to_json_string(&sf).unwrap();
        let back: SpaceFile = serde_json::from_str(&text).unwrap();
        let sp2 = back.to_space(&tol).unwrap();
        for n in 0..3 {
            assert!(max_abs_diff(sp.creator(n, 1), sp2.creator(n, 1)) < 1e-14);
        }
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        write_json(&p, &vec![1.0]).unwrap();
        write_json(&p, &vec![2.0]).unwrap();
        let v: Vec<f64> = read_json(&p).unwrap();
        assert_eq!(v, vec![2.0]);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn vectors_and_moments_parse_both_forms() {
        let a: JsonVector = serde_json::from_str("[1.0, 2.0]").unwrap();
        let b: JsonVector = serde_json::from_str(r#"{"re":[1.0],"im":[-1.0]}"#).unwrap();
        assert_eq!(a.to_vector().unwrap().len(), 2);
        assert_eq!(b.to_vector().unwrap()[0], C64::new(1.0, -1.0));
        let m: MomentsFile = serde_json::from_str(r#"{"moments":[1,0,1]}"#).unwrap();
        assert_eq!(m.into_moments(), vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn csv_table() {
        let mut t = Table::new(&["m", "ratio"]);
        t.push(vec![4.0, 2.0]);
        assert_eq!(t.to_csv(), "m,ratio\n4.0000000000000000e0,2.0000000000000000e0\n");
    }
}
