//! Readers for the MovieLens 100K (`u.data`, `u.user`, `u.item`) and 1M
//! (`ratings.dat`, `users.dat`, `movies.dat`) distributions.

use std::fs;
use std::path::{Path, PathBuf};

use ghrs_core::ratings::GenreSet;
use ghrs_core::{Dataset, Gender, ItemProfile, RatingRecord, RatingTable, UserProfile};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error(transparent)]
    Invalid(#[from] ghrs_core::Error),
}

pub type Result<T> = std::result::Result<T, LoadError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "100k")]
    Ml100k,
    #[serde(rename = "1m")]
    Ml1m,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Ml100k => "100k",
            Variant::Ml1m => "1m",
        }
    }
}

/// Genre names in the 100K flag order; 1M genres map onto the same indices.
pub const GENRES: [&str; 19] = [
    "unknown",
    "Action",
    "Adventure",
    "Animation",
    "Children's",
    "Comedy",
    "Crime",
    "Documentary",
    "Drama",
    "Fantasy",
    "Film-Noir",
    "Horror",
    "Musical",
    "Mystery",
    "Romance",
    "Sci-Fi",
    "Thriller",
    "War",
    "Western",
];

/// 1M occupation codes.
pub const OCCUPATIONS_1M: [&str; 21] = [
    "other or not specified",
    "academic/educator",
    "artist",
    "clerical/admin",
    "college/grad student",
    "customer service",
    "doctor/health care",
    "executive/managerial",
    "farmer",
    "homemaker",
    "K-12 student",
    "lawyer",
    "programmer",
    "retired",
    "sales/marketing",
    "scientist",
    "self-employed",
    "technician/engineer",
    "tradesman/craftsman",
    "unemployed",
    "writer",
];

struct Lines {
    path: PathBuf,
    text: String,
}

impl Lines {
    fn read(path: PathBuf) -> Result<Self> {
        let bytes = fs::read(&path).map_err(|source| LoadError::Io {
            path: path.clone(),
            source,
        })?;
        // movies.dat and u.item contain Latin-1 titles
        let text = String::from_utf8_lossy(&bytes).into_owned();
        Ok(Lines { path, text })
    }

    fn records<'a>(&'a self, sep: &'a str) -> impl Iterator<Item = (usize, Vec<&'a str>)> + 'a {
        self.text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(move |(i, l)| (i + 1, l.trim_end_matches('\r').split(sep).collect()))
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> LoadError {
        LoadError::Parse {
            path: self.path.clone(),
            line,
            msg: msg.into(),
        }
    }

    fn field<T: std::str::FromStr>(
        &self,
        line: usize,
        fields: &[&str],
        i: usize,
        what: &str,
    ) -> Result<T> {
        let raw = fields
            .get(i)
            .ok_or_else(|| self.err(line, format!("missing {what}")))?;
        raw.trim()
            .parse()
            .map_err(|_| self.err(line, format!("bad {what} {raw:?}")))
    }
}

fn ratings(lines: &Lines, sep: &str) -> Result<RatingTable> {
    let mut out = Vec::new();
    for (n, f) in lines.records(sep) {
        if f.len() < 4 {
            return Err(lines.err(n, format!("expected 4 fields, found {}", f.len())));
        }
        let rating: u8 = lines.field(n, &f, 2, "rating")?;
        if !(1..=5).contains(&rating) {
            return Err(lines.err(n, format!("rating {rating} outside 1..=5")));
        }
        out.push(RatingRecord {
            user_id: lines.field(n, &f, 0, "user id")?,
            item_id: lines.field(n, &f, 1, "item id")?,
            rating,
            timestamp: lines.field(n, &f, 3, "timestamp")?,
        });
    }
    Ok(RatingTable::new(out)?)
}

fn gender(lines: &Lines, line: usize, raw: &str) -> Result<Gender> {
    match raw.trim() {
        "M" | "m" => Ok(Gender::M),
        "F" | "f" => Ok(Gender::F),
        other => Err(lines.err(line, format!("bad gender {other:?}"))),
    }
}

pub fn load_100k(dir: &Path) -> Result<Dataset> {
    let r = Lines::read(dir.join("u.data"))?;
    let ratings = ratings(&r, "\t")?;

    let u = Lines::read(dir.join("u.user"))?;
    let mut users = Vec::new();
    for (n, f) in u.records("|") {
        if f.len() < 5 {
            return Err(u.err(n, format!("expected 5 fields, found {}", f.len())));
        }
        users.push(UserProfile {
            user_id: u.field(n, &f, 0, "user id")?,
            age: u.field(n, &f, 1, "age")?,
            gender: gender(&u, n, f[2])?,
            occupation: f[3].trim().to_string(),
            zip_code: f[4].trim().to_string(),
        });
    }

    let it = Lines::read(dir.join("u.item"))?;
    let mut items = Vec::new();
    for (n, f) in it.records("|") {
        if f.len() < 5 + GENRES.len() {
            return Err(it.err(
                n,
                format!("expected {} fields, found {}", 5 + GENRES.len(), f.len()),
            ));
        }
        let flags = &f[f.len() - GENRES.len()..];
        let mut genres = GenreSet::default();
        for (g, flag) in flags.iter().enumerate() {
            match flag.trim() {
                "1" => genres.insert(g),
                "0" => {}
                other => return Err(it.err(n, format!("bad genre flag {other:?}"))),
            }
        }
        items.push(ItemProfile {
            item_id: it.field(n, &f, 0, "item id")?,
            title: f[1].to_string(),
            genres,
        });
    }
    Ok(Dataset::new(ratings, users, items)?)
}

pub fn load_1m(dir: &Path) -> Result<Dataset> {
    let r = Lines::read(dir.join("ratings.dat"))?;
    let ratings = ratings(&r, "::")?;

    let u = Lines::read(dir.join("users.dat"))?;
    let mut users = Vec::new();
    for (n, f) in u.records("::") {
        if f.len() < 5 {
            return Err(u.err(n, format!("expected 5 fields, found {}", f.len())));
        }
        let code: usize = u.field(n, &f, 3, "occupation code")?;
        let occupation = OCCUPATIONS_1M
            .get(code)
            .ok_or_else(|| u.err(n, format!("occupation code {code} outside 0..=20")))?;
        users.push(UserProfile {
            user_id: u.field(n, &f, 0, "user id")?,
            gender: gender(&u, n, f[1])?,
            age: u.field(n, &f, 2, "age")?,
            occupation: occupation.to_string(),
            zip_code: f[4].trim().to_string(),
        });
    }

    let m = Lines::read(dir.join("movies.dat"))?;
    let mut items = Vec::new();
    for (n, f) in m.records("::") {
        if f.len() < 3 {
            return Err(m.err(n, format!("expected 3 fields, found {}", f.len())));
        }
        let mut genres = GenreSet::default();
        for name in f[f.len() - 1]
            .split('|')
            .map(str::trim)
            .filter(|g| !g.is_empty())
        {
            let g = GENRES
                .iter()
                .position(|k| *k == name)
                .ok_or_else(|| m.err(n, format!("unknown genre {name:?}")))?;
            genres.insert(g);
        }
        // titles may themselves contain "::"
        let title = f[1..f.len() - 1].join("::");
        items.push(ItemProfile {
            item_id: m.field(n, &f, 0, "movie id")?,
            title,
            genres,
        });
    }
    Ok(Dataset::new(ratings, users, items)?)
}

pub fn load(dir: &Path, variant: Variant) -> Result<Dataset> {
    match variant {
        Variant::Ml100k => load_100k(dir),
        Variant::Ml1m => load_1m(dir),
    }
}
