//! The bundled fixture corpus: named channels, supermaps, instruments and
//! states, regenerated by `evosym fixtures --out DIR`.

use std::collections::BTreeMap;
use std::path::Path;

use evosym::matrix::{ComplexMatrix, C64};
use evosym::operations::{adjoint_map, discard_and_prepare_zero, identity_channel, paulis};
use evosym::symmetry::SuperMap;
use evosym::tsqt::{luders_instrument, von_neumann_instrument};

use crate::spec_file::{channel_file, instrument_file, state_file, supermap_file, to_pretty, MapData};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn ket_bra(d: usize, a: usize, b: usize, w: f64) -> ComplexMatrix {
    ComplexMatrix::unit(d, a, b).scale(w)
}

/// `(file name, contents)` for every fixture.
pub fn corpus() -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut channel = |file: &str, name: &str, d_in: usize, d_out: usize, data: MapData| {
        out.push((file.to_string(), to_pretty(&channel_file(name, d_in, d_out, &data, BTreeMap::new()))));
    };
    channel("identity.json", "identity", 2, 2, MapData::Kraus(vec![ComplexMatrix::identity(2)]));
    channel(
        "c0.json",
        "uniform four-Pauli mixture",
        2,
        2,
        MapData::Kraus(paulis().iter().map(|p| p.scale(0.5)).collect()),
    );
    channel(
        "discard_prepare.json",
        "discard and prepare |0>",
        2,
        2,
        MapData::Kraus(vec![ket_bra(2, 0, 0, 1.0), ket_bra(2, 0, 1, 1.0)]),
    );
    let adj = adjoint_map(&discard_and_prepare_zero()).expect("CP input");
    channel(
        "adjoint_discard_prepare.json",
        "adjoint of discard and prepare |0>",
        2,
        2,
        MapData::Choi(adj.choi().clone()),
    );
    channel(
        "transpose.json",
        "bare transpose",
        2,
        2,
        MapData::Choi(evosym::matrix::swap_operator(2, 2)),
    );

    let mut supermap = |file: &str, name: &str, s: SuperMap| {
        out.push((file.to_string(), to_pretty(&supermap_file(name, s.in_dims, s.out_dims, &s.op))));
    };
    supermap("supermap_identity.json", "identity supermap", SuperMap::identity(2, 2));
    supermap(
        "supermap_double_transpose.json",
        "double transpose",
        SuperMap::double_transpose(2, 2),
    );
    supermap("supermap_weak_adjoint.json", "weak adjoint", SuperMap::weak_adjoint(2, 2));

    let z = von_neumann_instrument(&[vec![c(1.0), c(0.0)], vec![c(0.0), c(1.0)]]).expect("orthonormal");
    let luders = luders_instrument(&[
        ComplexMatrix::from_real_diagonal(&[1.0, 1.0, 0.0]),
        ComplexMatrix::from_real_diagonal(&[0.0, 0.0, 1.0]),
    ])
    .expect("complete projectors");
    let mut instrument = |file: &str, name: &str, d: usize, branches: Vec<(String, ComplexMatrix)>| {
        out.push((file.to_string(), to_pretty(&instrument_file(name, d, d, &branches))));
    };
    instrument(
        "instrument_z.json",
        "von Neumann Z measurement",
        2,
        z.branches().iter().enumerate().map(|(n, b)| (format!("z={n}"), b.choi().clone())).collect(),
    );
    instrument(
        "instrument_luders_d3.json",
        "Lüders measurement of span{|0>,|1>} vs |2>",
        3,
        luders
            .branches()
            .iter()
            .zip(["low", "high"])
            .map(|(b, n)| (n.to_string(), b.choi().clone()))
            .collect(),
    );
    // Branch "decay" maps I/2 to 3/4 |0><0|, above I/2: not time-symmetric.
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let decay = evosym::operations::choi_of_kraus_ops(2, 2, &[ket_bra(2, 0, 0, 1.0), ket_bra(2, 0, 1, h)]);
    let survive = evosym::operations::choi_of_kraus_ops(2, 2, &[ket_bra(2, 1, 1, h)]);
    instrument(
        "instrument_ts_invalid.json",
        "partial decay",
        2,
        vec![("decay".to_string(), decay), ("survive".to_string(), survive)],
    );

    let mut state = |file: &str, name: &str, rho: ComplexMatrix| {
        out.push((file.to_string(), to_pretty(&state_file(name, &rho))));
    };
    state("state_zero.json", "|0>", ComplexMatrix::from_real_diagonal(&[1.0, 0.0]));
    state("state_plus.json", "|+>", ComplexMatrix::from_fn(2, 2, |_, _| c(0.5)));
    state("state_mixed.json", "I/2", ComplexMatrix::from_real_diagonal(&[0.5, 0.5]));
    state("state_thermal.json", "diag(3/4, 1/4)", ComplexMatrix::from_real_diagonal(&[0.75, 0.25]));
    state(
        "state_d3.json",
        "diag(1/2, 1/3, 1/6)",
        ComplexMatrix::from_real_diagonal(&[0.5, 1.0 / 3.0, 1.0 / 6.0]),
    );

    // d_in * d_out = 4, but only three rows of Choi data.
    let identity = channel_file(
        "malformed dims",
        2,
        2,
        &MapData::Choi(identity_channel(2).choi().clone()),
        BTreeMap::new(),
    );
    let mut malformed = serde_json::to_value(&identity).expect("plain data");
    malformed["data"].as_array_mut().expect("rows").pop();
    out.push(("malformed_dims.json".to_string(), to_pretty(&malformed)));
    out
}

/// Writes the corpus into `dir`, creating it if needed.
pub fn write_corpus(dir: &Path) -> std::io::Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    corpus()
        .into_iter()
        .map(|(name, text)| {
            std::fs::write(dir.join(&name), text)?;
            Ok(name)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec_file::parse_channel;

    #[test]
    fn corpus_parses_and_names_are_unique() {
        let files = corpus();
        let names: std::collections::BTreeSet<_> = files.iter().map(|(n, _)| n.clone()).collect();
        assert_eq!(names.len(), files.len());
        let (_, c0) = files.iter().find(|(n, _)| n == "c0.json").unwrap();
        let parsed = parse_channel("c0.json", c0).unwrap();
        assert!(parsed.choi().distance(evosym::operations::uniform_pauli_channel().choi()) < 1e-15);
        let (_, bad) = files.iter().find(|(n, _)| n == "malformed_dims.json").unwrap();
        assert!(parse_channel("malformed_dims.json", bad).is_err());
    }
}
