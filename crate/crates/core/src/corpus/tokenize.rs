/// Lowercases, detaches every punctuation/symbol character into its own
/// token, and splits on whitespace.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    for c in text.chars() {
        if c.is_whitespace() {
            take(&mut word, &mut tokens);
            continue;
        }
        for lc in c.to_lowercase() {
            if lc.is_alphanumeric() {
                word.push(lc);
            } else {
                take(&mut word, &mut tokens);
                tokens.push(lc.to_string());
            }
        }
    }
    take(&mut word, &mut tokens);
    tokens
}

fn take(word: &mut String, tokens: &mut Vec<String>) {
    if !word.is_empty() {
        tokens.push(std::mem::take(word));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lowercases_and_splits() {
        assert_eq!(tokenize("Dear Students"), vec!["dear", "students"]);
    }

    #[test]
    fn detaches_punctuation() {
        assert_eq!(tokenize("program ini."), vec!["program", "ini", "."]);
        assert_eq!(tokenize("(a,b)!"), vec!["(", "a", ",", "b", ")", "!"]);
    }

    #[test]
    fn empty() {
        assert!(tokenize("").is_empty());
        assert!(tokenize(" \n\t").is_empty());
    }

    proptest! {
        #[test]
        fn idempotent_on_joined_output(text in "\\PC{0,60}") {
            let once = tokenize(&text);
            prop_assert_eq!(tokenize(&once.join(" ")), once);
        }
    }
}
