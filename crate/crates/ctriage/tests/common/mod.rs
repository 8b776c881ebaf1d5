#![allow(dead_code)]

pub mod onnx_fixture;

use std::fs;
use std::path::{Path, PathBuf};

use ctriage::volume_io::write_volume;
use ctriage_core::{Class, CtVolume};

/// Mock rule used across the integration tests: dark slices read COVID-19,
/// mid-grey CAP, bright Normal.
pub const MOCK_RULE: &str = "mean<64:0.1,0.2,0.7; mean<160:0.2,0.6,0.2; else:0.8,0.1,0.1";

/// Constant HU per class chosen so the windowed value lands in the rule's
/// band: -1100 HU -> 10, -500 HU -> 128, 100 HU -> 245.
pub fn class_hu(class: Class) -> i16 {
    match class {
        Class::Covid19 => -1100,
        Class::Cap => -500,
        Class::Normal => 100,
    }
}

/// One constant `side × side` slice per entry of `classes`.
pub fn volume_from_classes(patient_id: &str, classes: &[Class], side: usize) -> CtVolume {
    let voxels = classes
        .iter()
        .flat_map(|&c| std::iter::repeat(class_hu(c)).take(side * side))
        .collect();
    CtVolume::new(patient_id, classes.len(), side, side, Some(1.0), voxels).unwrap()
}

/// `runs` of (class, count) concatenated.
pub fn layout(runs: &[(Class, usize)]) -> Vec<Class> {
    runs.iter()
        .flat_map(|&(c, n)| std::iter::repeat(c).take(n))
        .collect()
}

pub struct SyntheticPatient {
    pub id: &'static str,
    pub slices: Vec<Class>,
    pub diagnosis: &'static str,
    pub expected_label: Class,
}

/// Five patients whose labels are fixed by hand from the vote formula with
/// default weights (0.7, 0.7, 0.5):
///
/// - P1: 100 COVID slices; central [10,90) -> x=80, x'=20 -> COVID19.
/// - P2: 100 slices, central 40 CAP + 40 Normal, peripheral 20 CAP
///   -> CAP 40 + 14 = 54, Normal 40 -> CAP.
/// - P3: 60 slices, central [10,50) = 20 COVID + 20 Normal, peripheral
///   10 CAP + 10 Normal -> COVID 20, CAP 7, Normal 25 -> Normal.
/// - P4: 30 slices (whole volume central), 15 CAP + 15 COVID -> tie at 15
///   -> COVID19 by priority.
/// - P5: 100 slices, central 30 COVID + 28 CAP + 22 Normal, peripheral
///   20 CAP -> COVID 30, CAP 42, Normal 22 -> CAP.
pub fn five_patients() -> Vec<SyntheticPatient> {
    use Class::*;
    vec![
        SyntheticPatient {
            id: "P1",
            slices: layout(&[(Covid19, 100)]),
            diagnosis: "COVID19",
            expected_label: Covid19,
        },
        SyntheticPatient {
            id: "P2",
            slices: layout(&[(Cap, 10), (Cap, 40), (Normal, 40), (Cap, 10)]),
            diagnosis: "CAP",
            expected_label: Cap,
        },
        SyntheticPatient {
            id: "P3",
            slices: layout(&[(Cap, 10), (Covid19, 20), (Normal, 20), (Normal, 10)]),
            diagnosis: "Normal",
            expected_label: Normal,
        },
        SyntheticPatient {
            id: "P4",
            slices: layout(&[(Cap, 15), (Covid19, 15)]),
            diagnosis: "CAP",
            expected_label: Covid19,
        },
        SyntheticPatient {
            id: "P5",
            slices: layout(&[(Cap, 10), (Covid19, 30), (Cap, 28), (Normal, 22), (Cap, 10)]),
            diagnosis: "Unknown",
            expected_label: Cap,
        },
    ]
}

/// Writes volumes plus `manifest.csv` into `dir`; returns the manifest path.
pub fn write_dataset(dir: &Path, patients: &[SyntheticPatient], side: usize) -> PathBuf {
    let mut csv = String::from("patient_id,volume_path,diagnosis,slice_labels_path\n");
    for p in patients {
        let volume = volume_from_classes(p.id, &p.slices, side);
        write_volume(&volume, dir.join(format!("{}.raw", p.id))).unwrap();
        csv.push_str(&format!("{},{}.raw,{},\n", p.id, p.id, p.diagnosis));
    }
    let path = dir.join("manifest.csv");
    fs::write(&path, csv).unwrap();
    path
}
