//! Coordinate text format for a matrix tuple.
//!
//! ```text
//! # socrom ddrom v1
//! layout <n_control> <n_state>
//! beta <beta>
//! parameterization structured|unstructured
//! A <q> <rows> <cols> <fn>
//! <i> <j> <value>
//! ...
//! end
//! B <p> <len> <fn>
//! <i> <value>
//! end
//! C <k> <len> <fn>
//! ...
//! ```
//!
//! `<fn>` is `const <v>`, `affine <offset> <slope>` or `power <e>`; the
//! constant terms `A 0` and `B 0` use `const 1`. Only nonzero entries are
//! written, with 17 significant digits so values round-trip exactly.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{DdromError, Result};
use crate::matrices::{BlockLayout, DdromMatrices, Parameterization};
use crate::scalar::ScalarFn;

const HEADER: &str = "# socrom ddrom v1";

pub fn write_string(m: &DdromMatrices) -> String {
    let mut s = String::new();
    let l = m.layout();
    let _ = writeln!(s, "{HEADER}");
    let _ = writeln!(s, "layout {} {}", l.n_control, l.n_state);
    let _ = writeln!(s, "beta {:.17e}", m.beta());
    let p = match m.parameterization() {
        Parameterization::Structured => "structured",
        Parameterization::Unstructured => "unstructured",
    };
    let _ = writeln!(s, "parameterization {p}");
    for (q, a) in m.a_terms().iter().enumerate() {
        let f = if q == 0 { ScalarFn::ONE } else { m.a_funs()[q - 1] };
        let _ = writeln!(s, "A {q} {} {} {}", a.nrows(), a.ncols(), fn_str(&f));
        for j in 0..a.ncols() {
            for i in 0..a.nrows() {
                let v = a[(i, j)];
                if v != 0.0 {
                    let _ = writeln!(s, "{i} {j} {v:.17e}");
                }
            }
        }
        s.push_str("end\n");
    }
    let mut vectors = |tag: &str, terms: &[DVector<f64>], fun: &dyn Fn(usize) -> ScalarFn| {
        for (k, v) in terms.iter().enumerate() {
            let _ = writeln!(s, "{tag} {k} {} {}", v.len(), fn_str(&fun(k)));
            for (i, x) in v.iter().enumerate() {
                if *x != 0.0 {
                    let _ = writeln!(s, "{i} {x:.17e}");
                }
            }
            s.push_str("end\n");
        }
    };
    vectors("B", m.b_terms(), &|p| if p == 0 { ScalarFn::ONE } else { m.b_funs()[p - 1] });
    vectors("C", m.c_terms(), &|k| m.c_funs()[k]);
    s
}

pub fn write_file(m: &DdromMatrices, path: &Path) -> Result<()> {
    std::fs::write(path, write_string(m))?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<DdromMatrices> {
    read_str(&std::fs::read_to_string(path)?)
}

pub fn read_str(text: &str) -> Result<DdromMatrices> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let mut layout = None;
    let mut beta = 0.0;
    let mut param = Parameterization::Structured;
    let mut a = Vec::new();
    let mut a_funs = Vec::new();
    let mut b = Vec::new();
    let mut b_funs = Vec::new();
    let mut c = Vec::new();
    let mut c_funs = Vec::new();

    while let Some((ln, line)) = lines.next() {
        let tok: Vec<&str> = line.split_whitespace().collect();
        let err = |msg: &str| DdromError::Parse {
            line: ln,
            msg: msg.to_string(),
        };
        match tok[0] {
            "layout" if tok.len() == 3 => {
                layout = Some(BlockLayout::new(parse(tok[1], ln)?, parse(tok[2], ln)?));
            }
            "beta" if tok.len() == 2 => beta = parse(tok[1], ln)?,
            "parameterization" if tok.len() == 2 => {
                param = match tok[1] {
                    "structured" => Parameterization::Structured,
                    "unstructured" => Parameterization::Unstructured,
                    _ => return Err(err("unknown parameterization")),
                }
            }
            "A" if tok.len() >= 5 => {
                let idx: usize = parse(tok[1], ln)?;
                if idx != a.len() {
                    return Err(err("A terms out of order"));
                }
                let (r, cols): (usize, usize) = (parse(tok[2], ln)?, parse(tok[3], ln)?);
                let f = parse_fn(&tok[4..], ln)?;
                let mut m = DMatrix::zeros(r, cols);
                for (ln, entry) in lines.by_ref() {
                    if entry == "end" {
                        break;
                    }
                    let t: Vec<&str> = entry.split_whitespace().collect();
                    if t.len() != 3 {
                        return Err(DdromError::Parse {
                            line: ln,
                            msg: "expected `i j value`".into(),
                        });
                    }
                    let (i, j): (usize, usize) = (parse(t[0], ln)?, parse(t[1], ln)?);
                    if i >= r || j >= cols {
                        return Err(DdromError::Parse {
                            line: ln,
                            msg: "index out of range".into(),
                        });
                    }
                    m[(i, j)] = parse(t[2], ln)?;
                }
                if idx > 0 {
                    a_funs.push(f);
                }
                a.push(m);
            }
            tag @ ("B" | "C") if tok.len() >= 4 => {
                let idx: usize = parse(tok[1], ln)?;
                let n: usize = parse(tok[2], ln)?;
                let f = parse_fn(&tok[3..], ln)?;
                let mut v = DVector::zeros(n);
                for (ln, entry) in lines.by_ref() {
                    if entry == "end" {
                        break;
                    }
                    let t: Vec<&str> = entry.split_whitespace().collect();
                    if t.len() != 2 {
                        return Err(DdromError::Parse {
                            line: ln,
                            msg: "expected `i value`".into(),
                        });
                    }
                    let i: usize = parse(t[0], ln)?;
                    if i >= n {
                        return Err(DdromError::Parse {
                            line: ln,
                            msg: "index out of range".into(),
                        });
                    }
                    v[i] = parse(t[1], ln)?;
                }
                if tag == "B" {
                    if idx != b.len() {
                        return Err(err("B terms out of order"));
                    }
                    if idx > 0 {
                        b_funs.push(f);
                    }
                    b.push(v);
                } else {
                    if idx != c.len() {
                        return Err(err("C terms out of order"));
                    }
                    c_funs.push(f);
                    c.push(v);
                }
            }
            _ => return Err(err("unrecognized line")),
        }
    }
    let layout = layout.ok_or(DdromError::Parse {
        line: 0,
        msg: "missing layout".into(),
    })?;
    DdromMatrices::from_parts(layout, beta, param, a, a_funs, b, b_funs, c, c_funs)
}

fn fn_str(f: &ScalarFn) -> String {
    match *f {
        ScalarFn::Const { value } => format!("const {value:.17e}"),
        ScalarFn::Affine { offset, slope } => format!("affine {offset:.17e} {slope:.17e}"),
        ScalarFn::Power { exponent } => format!("power {exponent}"),
    }
}

fn parse_fn(tok: &[&str], ln: usize) -> Result<ScalarFn> {
    match tok {
        ["const", v] => Ok(ScalarFn::constant(parse(v, ln)?)),
        ["affine", o, s] => Ok(ScalarFn::affine(parse(o, ln)?, parse(s, ln)?)),
        ["power", e] => Ok(ScalarFn::Power {
            exponent: parse(e, ln)?,
        }),
        _ => Err(DdromError::Parse {
            line: ln,
            msg: format!("bad scalar function `{}`", tok.join(" ")),
        }),
    }
}

fn parse<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| DdromError::Parse {
        line,
        msg: format!("cannot parse `{s}`"),
    })
}
