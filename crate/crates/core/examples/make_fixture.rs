//! Writes the synthetic movie tables used by the end-to-end tests: a
//! 200-row training table and a 40-row table of 2020 releases carrying only
//! the attributes available right after release, with the vote column
//! under its newer header.
//!
//! ```text
//! cargo run -p cinestat-core --example make_fixture -- crates/core/tests/fixtures
//! ```

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const GENRES: [(&str, f64); 17] = [
    ("Action", -3.0),
    ("Adventure", 1.0),
    ("Animation", 5.0),
    ("Biography", 4.0),
    ("Comedy", -2.0),
    ("Crime", 1.0),
    ("Drama", 4.0),
    ("Family", -1.0),
    ("Fantasy", -2.0),
    ("Horror", -6.0),
    ("Music", 2.0),
    ("Musical", 1.0),
    ("Mystery", 0.0),
    ("Romance", -1.0),
    ("Sport", 0.0),
    ("Thriller", -2.0),
    ("War", 3.0),
];

const ADJECTIVES: [&str; 12] = [
    "Silent", "Crimson", "Last", "Broken", "Golden", "Hidden", "Wild", "Quiet", "Distant",
    "Burning", "Frozen", "Little",
];
const NOUNS: [&str; 12] = [
    "Harbor", "Witness", "Summer", "Orchard", "Signal", "Kingdom", "River", "Promise", "Engine",
    "Garden", "Frontier", "Echo",
];

const N_ROWS: usize = 200;
const N_RECENT: usize = 40;
const SEED: u64 = 20_240_601;

fn main() {
    let dir = std::path::PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "crates/core/tests/fixtures".into()),
    );
    std::fs::create_dir_all(&dir).expect("creatable output directory");
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    write_main(&dir.join("movies.csv"), &mut rng);
    write_recent(&dir.join("recent_2020.csv"), &mut rng);
}

fn genre_set(i: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    // every genre appears at least once early on, then two or three at random
    let mut genres: Vec<usize> = vec![i % GENRES.len()];
    for _ in 0..rng.random_range(1..=2) {
        let g = rng.random_range(0..GENRES.len());
        if !genres.contains(&g) {
            genres.push(g);
        }
    }
    genres.sort_unstable();
    genres
}

fn genre_cell(genres: &[usize]) -> String {
    genres.iter().map(|&g| GENRES[g].0).collect::<Vec<_>>().join(", ")
}

fn score(quality: f64, genres: &[usize], duration: i64, noise: f64) -> i64 {
    let genre_effect: f64 = genres.iter().map(|&g| GENRES[g].1).sum();
    (55.0 + 14.0 * quality + genre_effect + 0.05 * (duration as f64 - 110.0) + 7.0 * noise)
        .round()
        .clamp(5.0, 98.0) as i64
}

fn title(i: usize, rng: &mut ChaCha8Rng) -> String {
    format!(
        "{} {} {}",
        ADJECTIVES.choose(rng).unwrap(),
        NOUNS.choose(rng).unwrap(),
        i + 1
    )
}

fn write_recent(path: &std::path::Path, rng: &mut ChaCha8Rng) {
    let z = Normal::new(0.0, 1.0).unwrap();
    let mut w = csv::Writer::from_path(path).expect("writable output path");
    w.write_record([
        "title", "year", "date_published", "genre", "duration", "weighted_average_vote", "votes",
        "metascore",
    ])
    .unwrap();
    for i in 0..N_RECENT {
        let genres = genre_set(i, rng);
        let quality: f64 = z.sample(rng);
        let duration = (110.0 + 18.0 * z.sample(rng)).round().max(70.0) as i64;
        let avg_vote = (6.3 + 0.8 * quality + 0.3 * z.sample(rng)).clamp(1.0, 9.5);
        let votes = (8.0 + 1.2 * z.sample(rng)).exp().round() as u64;
        let metascore = score(quality, &genres, duration, z.sample(rng));
        w.write_record([
            title(N_ROWS + i, rng),
            "2020".into(),
            format!("2020-{:02}-{:02}", 1 + i % 12, rng.random_range(1..=28u32)),
            genre_cell(&genres),
            duration.to_string(),
            format!("{avg_vote:.1}"),
            votes.to_string(),
            metascore.to_string(),
        ])
        .unwrap();
    }
    w.flush().unwrap();
    eprintln!("wrote {N_RECENT} rows to {}", path.display());
}

fn write_main(path: &std::path::Path, rng: &mut ChaCha8Rng) {
    let z = Normal::new(0.0, 1.0).unwrap();
    let mut w = csv::Writer::from_path(path).expect("writable output path");
    w.write_record([
        "imdb_title_id",
        "title",
        "year",
        "date_published",
        "genre",
        "duration",
        "avg_vote",
        "votes",
        "budget",
        "top1000_voters_rating",
        "reviews_from_users",
        "reviews_from_critics",
        "metascore",
    ])
    .unwrap();

    for i in 0..N_ROWS {
        let year = rng.random_range(2008..=2019);
        let month = rng.random_range(1..=12u32);
        let day = rng.random_range(1..=28u32);
        let mut title = title(i, rng);
        if i % 37 == 5 {
            title = format!("{title}, Part II");
        }
        let genres = genre_set(i, rng);

        let quality: f64 = z.sample(rng);
        let duration = (110.0 + 18.0 * z.sample(rng)).round().max(70.0) as i64;
        let avg_vote = (6.3 + 0.8 * quality + 0.3 * z.sample(rng)).clamp(1.0, 9.5);
        let top1000 = (avg_vote - 0.4 + 0.25 * z.sample(rng)).clamp(1.0, 9.5);
        let votes = (10.0 + 1.2 * z.sample(rng)).exp().round() as u64;
        let budget = (16.5 + z.sample(rng)).exp().round();
        let users = (5.5 + z.sample(rng)).exp().round();
        let critics = (4.5 + 0.8 * z.sample(rng)).exp().round();
        let metascore = score(quality, &genres, duration, z.sample(rng));

        let mut row = vec![
            format!("tt{:07}", 100_000 + i),
            title,
            year.to_string(),
            format!("{year}-{month:02}-{day:02}"),
            genre_cell(&genres),
            duration.to_string(),
            format!("{avg_vote:.1}"),
            votes.to_string(),
            if rng.random_bool(0.85) {
                format!("$ {budget}")
            } else {
                String::new()
            },
            format!("{top1000:.1}"),
            users.to_string(),
            critics.to_string(),
            if rng.random_bool(0.95) {
                metascore.to_string()
            } else {
                String::new()
            },
        ];

        // a few rows the loader must reject
        match i {
            17 => row[3] = format!("{year}-13-40"),
            53 => row[5] = "n/a min".into(),
            88 => row[1] = String::new(),
            121 => row[6] = "11.2".into(),
            157 => row[12] = "104".into(),
            190 => row[4] = String::new(),
            _ => {}
        }
        w.write_record(&row).unwrap();
    }
    w.flush().unwrap();
    eprintln!("wrote {N_ROWS} rows to {}", path.display());
}
