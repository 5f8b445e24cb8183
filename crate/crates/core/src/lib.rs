//! Membership-function generation by neighbourhood-graph clustering and
//! cooperative fuzzy querying over a concept lattice.

pub mod cluster;
pub mod dataset;
pub mod fca;
pub mod incremental;
pub mod kb;
pub mod membership;
pub mod query;
pub mod rng;
pub mod session;
pub mod validity;

pub use cluster::{cluster_plain, clusterdb_star, Partition};
pub use dataset::{AttributeSeries, Dataset};
pub use kb::KnowledgeBase;
pub use membership::{gfat, LinguisticVariable, TrapezoidMf};

#[cfg(test)]
pub(crate) mod test_support {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    use crate::dataset::{read_csv, AttributeSeries, CsvOptions, Dataset};
    use crate::kb::KnowledgeBase;
    use crate::membership::{LinguisticVariable, TrapezoidMf};

    pub const AGES: [f64; 29] = [
        10.0, 11.0, 12.0, 13.0, 14.0, 15.0, 17.0, 30.0, 31.0, 32.0, 34.0, 36.0, 38.0, 39.0, 40.0,
        41.0, 42.0, 45.0, 46.0, 48.0, 50.0, 69.0, 70.0, 72.0, 75.0, 76.0, 90.0, 91.0, 95.0,
    ];

    /// The four age clusters as split by the threshold of 4.
    pub fn age_clusters() -> Vec<Vec<f64>> {
        vec![
            AGES[..7].to_vec(),
            AGES[7..21].to_vec(),
            AGES[21..26].to_vec(),
            AGES[26..].to_vec(),
        ]
    }

    pub const EMPLOYE_QUERY: &str = "SELECT nom FROM employé WHERE salaire is faible and age is grand \
         and nbAT is moyen and nbE is faible and taille is moyenne";

    pub fn employe() -> (Dataset, KnowledgeBase) {
        let csv = include_str!("../../../data/employe.csv");
        let kb = include_str!("../../../data/employe_kb.json");
        (
            read_csv("employe", csv.as_bytes(), CsvOptions::default()).unwrap(),
            KnowledgeBase::from_json_str(kb).unwrap(),
        )
    }

    pub fn taille() -> LinguisticVariable {
        LinguisticVariable::new(
            "taille",
            vec![
                TrapezoidMf::new("p", 100.0, 100.0, 160.0, 165.0).unwrap(),
                TrapezoidMf::new("m", 160.0, 165.0, 170.0, 175.0).unwrap(),
                TrapezoidMf::new("g", 170.0, 175.0, 200.0, 200.0).unwrap(),
            ],
        )
        .unwrap()
    }

    /// `k` runs of 8-20 values with internal gaps of 1 or 2 separated by gaps
    /// of 25-40. The first run always contains both internal gap sizes.
    pub fn planted_series(k: usize, seed: u64) -> (AttributeSeries, Vec<Vec<f64>>) {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut groups = Vec::new();
        let mut at = 0.0;
        for g in 0..k {
            if g > 0 {
                at += f64::from(rng.random_range(25..=40));
            }
            let n = rng.random_range(8..=20);
            let mut run = vec![at];
            for i in 1..n {
                let step = match (g, i) {
                    (0, 1) => 1.0,
                    (0, 2) => 2.0,
                    _ => f64::from(rng.random_range(1..=2)),
                };
                at += step;
                run.push(at);
            }
            groups.push(run);
        }
        let all: Vec<f64> = groups.concat();
        (AttributeSeries::from_values("x", &all), groups)
    }
}
