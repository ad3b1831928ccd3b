//! Reading and writing sparse bag-of-words corpora in svmlight form, and
//! cutting them into seeded mini-batches.

use std::io::Cursor;
use std::path::Path;

use bayespa::corpus::{read_svmlight, LoadOptions, MinibatchStream};

fn main() -> bayespa::Result<()> {
    let text = "\
+1 0:2 3:1 7:4
-1 1:1 2:3
+1 3:2 5:1
-1 2:1 6:2 7:1
";
    let binary = read_svmlight(Cursor::new(text), Path::new("inline"), &LoadOptions::default())?;
    println!(
        "binary corpus: {} docs, {} words, {} tokens, longest doc {}",
        binary.len(),
        binary.num_words(),
        binary.total_tokens(),
        binary.max_doc_len()
    );

    let multi = read_svmlight(
        Cursor::new("0,2 0:1 4:2\n1 2:5\nnone 1:1\n"),
        Path::new("inline"),
        &LoadOptions::default(),
    )?;
    for (i, d) in multi.docs().iter().enumerate() {
        println!("doc {i}: tokens {:?}, labels {:?}", d.tokens(), d.labels());
    }
    let mut out = Vec::new();
    multi.write_svmlight(&mut out).expect("in-memory write");
    print!("round trip:\n{}", String::from_utf8_lossy(&out));

    for b in MinibatchStream::new(binary.len(), 3, 2, 9)? {
        println!("epoch {} step {}: {:?}", b.epoch, b.step, b.indices);
    }
    Ok(())
}
