use std::collections::HashMap;
use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result, RowError};
use crate::model::{Day, Outbreak, Population, StudyConfig};

pub const LINE_LIST_HEADER: [&str; 3] = ["person_id", "household_id", "onset_day"];

/// A parsed line list: one person per row, households numbered in order of
/// first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct LineList {
    pub person_ids: Vec<String>,
    pub household_ids: Vec<String>,
    pub population: Arc<Population>,
    pub onsets: Vec<Option<Day>>,
    /// Source line of each person's row.
    lines: Vec<usize>,
}

impl LineList {
    /// Identifiers `p<i>` and `h<j>` for an outbreak with no source file.
    pub fn from_outbreak(outbreak: &Outbreak) -> Self {
        let pop = outbreak.population();
        Self {
            person_ids: (0..pop.len()).map(|i| format!("p{i}")).collect(),
            household_ids: (0..pop.num_households()).map(|h| format!("h{h}")).collect(),
            population: Arc::clone(outbreak.population_arc()),
            onsets: outbreak.onsets().to_vec(),
            lines: (2..pop.len() + 2).collect(),
        }
    }

    pub fn max_onset(&self) -> Option<Day> {
        self.onsets.iter().flatten().copied().max()
    }

    /// Attach a study configuration; out-of-range onsets are reported with
    /// their line numbers.
    pub fn outbreak(&self, config: StudyConfig) -> Result<Outbreak> {
        config.validate()?;
        let earliest = config.latent.min_days() + 1;
        let errors: Vec<RowError> = self
            .onsets
            .iter()
            .zip(&self.lines)
            .filter_map(|(onset, &line)| {
                let day = (*onset)?;
                let message = if day < earliest {
                    format!("onset day {day} precedes earliest possible onset {earliest}")
                } else if day > config.horizon {
                    format!("onset day {day} is after horizon {}", config.horizon)
                } else {
                    return None;
                };
                Some(RowError { line, message })
            })
            .collect();
        if !errors.is_empty() {
            return Err(Error::LineList(errors));
        }
        Outbreak::new(Arc::clone(&self.population), Arc::new(config), self.onsets.clone())
    }
}

pub fn read_line_list<R: Read>(reader: R) -> Result<LineList> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(Error::LineList(vec![RowError { line: 1, message: "missing header".into() }])),
    };
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    if names != LINE_LIST_HEADER {
        return Err(Error::LineList(vec![RowError {
            line: 1,
            message: format!("header must be `{}`, found `{}`", LINE_LIST_HEADER.join(","), names.join(",")),
        }]));
    }

    let mut errors = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut household_index: HashMap<String, usize> = HashMap::new();
    let mut list = LineList {
        person_ids: Vec::new(),
        household_ids: Vec::new(),
        population: Arc::new(Population::from_households(Vec::new())?),
        onsets: Vec::new(),
        lines: Vec::new(),
    };
    let mut members: Vec<Vec<usize>> = Vec::new();

    for record in records {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                errors.push(RowError { line, message: e.to_string() });
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 3 {
            errors.push(RowError { line, message: format!("expected 3 fields, found {}", record.len()) });
            continue;
        }
        let person = record[0].trim();
        let household = record[1].trim();
        let onset_field = record[2].trim();
        if person.is_empty() {
            errors.push(RowError { line, message: "empty person_id".into() });
            continue;
        }
        if household.is_empty() {
            errors.push(RowError { line, message: "empty household_id".into() });
            continue;
        }
        if let Some(first) = seen.get(person) {
            errors.push(RowError { line, message: format!("duplicate person_id `{person}` (first on line {first})") });
            continue;
        }
        let onset = if onset_field.is_empty() {
            None
        } else {
            match onset_field.parse::<Day>() {
                Ok(d) if d >= 1 => Some(d),
                _ => {
                    errors.push(RowError {
                        line,
                        message: format!("onset_day must be an integer >= 1 or empty, found `{onset_field}`"),
                    });
                    continue;
                }
            }
        };
        let index = list.person_ids.len();
        seen.insert(person.to_string(), line);
        let h = *household_index.entry(household.to_string()).or_insert_with(|| {
            list.household_ids.push(household.to_string());
            members.push(Vec::new());
            members.len() - 1
        });
        members[h].push(index);
        list.person_ids.push(person.to_string());
        list.onsets.push(onset);
        list.lines.push(line);
    }

    if !errors.is_empty() {
        return Err(Error::LineList(errors));
    }
    if list.person_ids.is_empty() {
        return Err(Error::Population("line list has no persons".into()));
    }
    list.population = Arc::new(Population::from_households(members)?);
    Ok(list)
}

pub fn parse_line_list(text: &str) -> Result<LineList> {
    read_line_list(text.as_bytes())
}

/// Rows in person order; never-symptomatic persons get an empty onset field.
pub fn write_line_list<W: Write>(list: &LineList, out: W) -> Result<()> {
    let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    writer.write_record(LINE_LIST_HEADER)?;
    for (i, person) in list.person_ids.iter().enumerate() {
        let household = &list.household_ids[list.population.household_of(i)];
        let onset = list.onsets[i].map(|d| d.to_string()).unwrap_or_default();
        writer.write_record([person.as_str(), household.as_str(), onset.as_str()])?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PeriodDistribution;

    fn config(s: Day, t: Day) -> StudyConfig {
        StudyConfig::new(s, t, PeriodDistribution::uniform(1, 3).unwrap(), PeriodDistribution::uniform(3, 5).unwrap())
            .unwrap()
    }

    #[test]
    fn parses_households_in_order() {
        let text = "person_id,household_id,onset_day\na,H1,4\nb,H2,\nc,H1,\nd,H3,7\n";
        let list = parse_line_list(text).unwrap();
        assert_eq!(list.household_ids, ["H1", "H2", "H3"]);
        assert_eq!(list.population.households(), &[vec![0, 2], vec![1], vec![3]]);
        assert_eq!(list.onsets, [Some(4), None, None, Some(7)]);
        assert_eq!(list.max_onset(), Some(7));
    }

    #[test]
    fn header_only_is_empty_population() {
        let err = parse_line_list("person_id,household_id,onset_day\n").unwrap_err();
        assert!(matches!(err, Error::Population(_)));
    }

    #[test]
    fn every_bad_row_is_reported() {
        let text = "person_id,household_id,onset_day\na,H1,4\na,H1,\nb,,3\nc,H2,x\nd,H2,0\ne,H3\nf,H3,2\n";
        let Error::LineList(errors) = parse_line_list(text).unwrap_err() else { panic!() };
        let lines: Vec<usize> = errors.iter().map(|e| e.line).collect();
        assert_eq!(lines, [3, 4, 5, 6, 7]);
        // 7 data rows = 2 persons accepted + 5 errors
    }

    #[test]
    fn bounds_checked_against_config() {
        let list = parse_line_list("person_id,household_id,onset_day\na,H,1\nb,H,30\nc,H,5\n").unwrap();
        let Error::LineList(errors) = list.outbreak(config(10, 20)).unwrap_err() else { panic!() };
        assert_eq!(errors.iter().map(|e| e.line).collect::<Vec<_>>(), [2, 3]);
        let ok = parse_line_list("person_id,household_id,onset_day\nc,H,5\n").unwrap();
        assert_eq!(ok.outbreak(config(10, 20)).unwrap().num_cases(), 1);
    }

    #[test]
    fn round_trip() {
        let text = "person_id,household_id,onset_day\nx1,A,3\nx2,B,\nx3,A,12\nx4,C,\n";
        let list = parse_line_list(text).unwrap();
        let mut buf = Vec::new();
        write_line_list(&list, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), text);
    }

    #[test]
    fn rejects_wrong_header() {
        assert!(parse_line_list("id,household,onset\n1,1,1\n").is_err());
        assert!(parse_line_list("").is_err());
    }
}
