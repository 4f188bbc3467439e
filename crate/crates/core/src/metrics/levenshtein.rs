use crate::error::{Error, Result};
use crate::model::PhonemicLexicon;

/// Unit-cost edit distance between two symbol sequences.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Edit distance divided by the longer sequence's length, in [0, 1].
pub fn normalized_levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySequence);
    }
    Ok(levenshtein(a, b) as f64 / a.len().max(b.len()) as f64)
}

/// Smallest normalized distance over all pronunciation pairs of two words.
pub fn word_distance(w1: &str, w2: &str, lexicon: &PhonemicLexicon) -> Result<f64> {
    let p1 = lexicon
        .pronunciations(w1)
        .ok_or_else(|| Error::UnknownWord(w1.to_string()))?;
    let p2 = lexicon
        .pronunciations(w2)
        .ok_or_else(|| Error::UnknownWord(w2.to_string()))?;
    let mut best = f64::INFINITY;
    for a in p1 {
        for b in p2 {
            best = best.min(normalized_levenshtein(a, b)?);
            if best == 0.0 {
                return Ok(0.0);
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use std::collections::{HashSet, VecDeque};

    use proptest::prelude::*;

    use super::*;

    fn ph(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    /// Shortest edit script by breadth-first search over all sequences reachable
    /// with single insert/delete/substitute steps.
    fn bfs_distance(a: &[u8], b: &[u8], alphabet: &[u8]) -> usize {
        let max_len = a.len().max(b.len());
        let mut seen = HashSet::new();
        let mut queue = VecDeque::new();
        queue.push_back((a.to_vec(), 0));
        seen.insert(a.to_vec());
        while let Some((s, d)) = queue.pop_front() {
            if s == b {
                return d;
            }
            let mut next = Vec::new();
            for i in 0..s.len() {
                let mut del = s.clone();
                del.remove(i);
                next.push(del);
                for &c in alphabet {
                    let mut sub = s.clone();
                    sub[i] = c;
                    next.push(sub);
                }
            }
            if s.len() < max_len {
                for i in 0..=s.len() {
                    for &c in alphabet {
                        let mut ins = s.clone();
                        ins.insert(i, c);
                        next.push(ins);
                    }
                }
            }
            for n in next {
                if seen.insert(n.clone()) {
                    queue.push_back((n, d + 1));
                }
            }
        }
        unreachable!()
    }

    #[test]
    fn fixtures() {
        assert_eq!(normalized_levenshtein(&ph("HH AE T"), &ph("HH AE T")).unwrap(), 0.0);
        let d = normalized_levenshtein(&ph("HH AE T"), &ph("K AE T")).unwrap();
        assert!((d - 1.0 / 3.0).abs() < 1e-15);
        let d = normalized_levenshtein(&ph("HH AE N D SH EY K"), &ph("HH AE N D B R EY K")).unwrap();
        assert_eq!(d, 0.25);
    }

    #[test]
    fn bfs_oracle_agrees_on_fixture() {
        // HH=0 AE=1 T=2 K=3
        assert_eq!(bfs_distance(&[0, 1, 2], &[3, 1, 2], &[0, 1, 2, 3]), 1);
        assert_eq!(levenshtein(&[0, 1, 2], &[3, 1, 2]), 1);
    }

    #[test]
    fn empty_is_error() {
        assert!(matches!(normalized_levenshtein::<u8>(&[], &[1]), Err(Error::EmptySequence)));
    }

    #[test]
    fn word_distance_uses_closest_variant() {
        let mut lex = PhonemicLexicon::new();
        lex.insert("read", &ph("R IY1 D")).unwrap();
        lex.insert("read", &ph("R EH1 D")).unwrap();
        lex.insert("red", &ph("R EH1 D")).unwrap();
        lex.insert("handshake", &ph("HH AE1 N D SH EY2 K")).unwrap();
        lex.insert("handbrake", &ph("HH AE1 N D B R EY2 K")).unwrap();
        assert_eq!(word_distance("read", "read", &lex).unwrap(), 0.0);
        assert_eq!(word_distance("read", "red", &lex).unwrap(), 0.0);
        assert_eq!(word_distance("handshake", "handbrake", &lex).unwrap(), 0.25);
        let err = word_distance("read", "reed", &lex).unwrap_err();
        assert!(err.to_string().contains("reed"));
    }

    proptest! {
        #[test]
        fn matches_bfs_on_short_sequences(
            a in prop::collection::vec(0u8..3, 1..4),
            b in prop::collection::vec(0u8..3, 1..4),
        ) {
            prop_assert_eq!(levenshtein(&a, &b), bfs_distance(&a, &b, &[0, 1, 2]));
        }

        #[test]
        fn metric_properties(
            a in prop::collection::vec(0u8..6, 1..12),
            b in prop::collection::vec(0u8..6, 1..12),
            c in prop::collection::vec(0u8..6, 1..12),
        ) {
            prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
            prop_assert!(levenshtein(&a, &c) <= levenshtein(&a, &b) + levenshtein(&b, &c));
            let d = normalized_levenshtein(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
            prop_assert_eq!(d == 0.0, a == b);
        }
    }
}
