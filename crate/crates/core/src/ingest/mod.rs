//! EPUB ingestion.
//!
//! An EPUB is a ZIP archive. `META-INF/container.xml` names the OPF package
//! document, whose `<spine>` lists manifest items in reading order. Each
//! XHTML spine item is flattened into a [`SectionText`].

mod xhtml;

pub use xhtml::{decode_lossy, flatten_xhtml};

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Seek, Write};
use std::path::{Path, PathBuf};

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use zip::result::ZipError;
use zip::ZipArchive;

use crate::par;

/// Page/document break marker between sections.
pub const PAGE_BREAK: char = '\u{000C}';

const CONTAINER_PATH: &str = "META-INF/container.xml";
const XHTML_MEDIA_TYPES: [&str; 2] = ["application/xhtml+xml", "text/html"];

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{path}: not a ZIP archive")]
    NotZip { path: PathBuf },
    #[error("{path}: missing {CONTAINER_PATH}")]
    MissingContainer { path: PathBuf },
    #[error("{path}: malformed package document: {reason}")]
    MalformedOpf { path: PathBuf, reason: String },
    #[error("{path}: spine has no XHTML content documents")]
    EmptySpine { path: PathBuf },
    #[error("cannot read {path}")]
    Io { path: PathBuf, source: io::Error },
}

impl IngestError {
    fn io(path: &Path, source: io::Error) -> Self {
        IngestError::Io { path: path.to_path_buf(), source }
    }

    fn malformed(path: &Path, reason: impl Into<String>) -> Self {
        IngestError::MalformedOpf { path: path.to_path_buf(), reason: reason.into() }
    }
}

/// One content document from the spine: archive-relative path and raw XHTML.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentDoc {
    pub path: String,
    pub xhtml: String,
}

#[derive(Debug, Clone)]
pub struct EbookArchive {
    pub title: Option<String>,
    content_docs: Vec<ContentDoc>,
}

impl EbookArchive {
    /// Content documents in spine order. Never empty.
    pub fn content_docs(&self) -> &[ContentDoc] {
        &self.content_docs
    }
}

/// Flattened plain text of one content document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionText {
    pub text: String,
    pub source_path: String,
}

impl SectionText {
    pub fn new(text: impl Into<String>, source_path: impl Into<String>) -> Self {
        SectionText { text: text.into(), source_path: source_path.into() }
    }
}

pub fn open_epub(path: impl AsRef<Path>) -> Result<EbookArchive, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| IngestError::io(path, e))?;
    read_epub(file, path)
}

/// Reads an EPUB from any seekable reader. `path` is only used for error reports.
pub fn read_epub<R: Read + Seek>(reader: R, path: &Path) -> Result<EbookArchive, IngestError> {
    let mut zip = ZipArchive::new(reader).map_err(|e| match e {
        ZipError::Io(source) if source.kind() != io::ErrorKind::UnexpectedEof => {
            IngestError::io(path, source)
        }
        _ => IngestError::NotZip { path: path.to_path_buf() },
    })?;

    let container = match read_entry(&mut zip, CONTAINER_PATH) {
        Ok(Some(bytes)) => decode_lossy(&bytes),
        Ok(None) => return Err(IngestError::MissingContainer { path: path.to_path_buf() }),
        Err(e) => return Err(IngestError::io(path, e)),
    };
    let opf_path = rootfile_path(&container).ok_or_else(|| {
        IngestError::malformed(path, "container.xml has no rootfile full-path")
    })?;
    let opf = match read_entry(&mut zip, &opf_path) {
        Ok(Some(bytes)) => decode_lossy(&bytes),
        Ok(None) => {
            return Err(IngestError::malformed(path, format!("package {opf_path} not in archive")))
        }
        Err(e) => return Err(IngestError::io(path, e)),
    };
    let package = parse_package(&opf).map_err(|reason| IngestError::malformed(path, reason))?;

    let base = match opf_path.rfind('/') {
        Some(i) => &opf_path[..=i],
        None => "",
    };
    let mut content_docs = Vec::new();
    for idref in &package.spine {
        let item = package.manifest.get(idref).ok_or_else(|| {
            IngestError::malformed(path, format!("spine idref {idref:?} not in manifest"))
        })?;
        if !XHTML_MEDIA_TYPES.contains(&item.media_type.as_str()) {
            continue;
        }
        let doc_path = resolve_href(base, &item.href);
        let bytes = read_entry(&mut zip, &doc_path)
            .map_err(|e| IngestError::io(path, e))?
            .ok_or_else(|| {
                IngestError::malformed(path, format!("spine item {doc_path} not in archive"))
            })?;
        content_docs.push(ContentDoc { path: doc_path, xhtml: decode_lossy(&bytes) });
    }
    if content_docs.is_empty() {
        return Err(IngestError::EmptySpine { path: path.to_path_buf() });
    }
    Ok(EbookArchive { title: package.title, content_docs })
}

/// One section per content document, spine order preserved.
pub fn epub_to_sections(archive: &EbookArchive) -> Vec<SectionText> {
    par::map(&archive.content_docs, |doc| SectionText {
        text: flatten_xhtml(&doc.xhtml),
        source_path: doc.path.clone(),
    })
}

/// Plain-text fallback: the whole file is one section.
pub fn read_plaintext(path: impl AsRef<Path>) -> Result<Vec<SectionText>, IngestError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| IngestError::io(path, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(vec![SectionText::new(decode_lossy(&bytes), name)])
}

/// Dispatches on extension: `.txt` is read as plain text, anything else as EPUB.
pub fn load_sections(path: impl AsRef<Path>) -> Result<Vec<SectionText>, IngestError> {
    let path = path.as_ref();
    let is_txt = path
        .extension()
        .map(|ext| ext.eq_ignore_ascii_case("txt"))
        .unwrap_or(false);
    if is_txt {
        read_plaintext(path)
    } else {
        open_epub(path).map(|archive| epub_to_sections(&archive))
    }
}

pub const MANIFEST_FILE: &str = "manifest.tsv";

fn section_file_name(index: usize) -> String {
    format!("section_{index:05}.txt")
}

/// Writes one UTF-8 file per section plus `manifest.tsv`
/// (`index<TAB>file<TAB>source_path`, one line per section, in order).
pub fn write_sections(dir: impl AsRef<Path>, sections: &[SectionText]) -> io::Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let mut manifest = BufWriter::new(File::create(&manifest_path)?);
    for (i, section) in sections.iter().enumerate() {
        let name = section_file_name(i);
        fs::write(dir.join(&name), section.text.as_bytes())?;
        writeln!(manifest, "{i}\t{name}\t{}", section.source_path)?;
    }
    manifest.flush()?;
    Ok(manifest_path)
}

/// Reads a dump written by [`write_sections`].
pub fn read_sections(dir: impl AsRef<Path>) -> io::Result<Vec<SectionText>> {
    let dir = dir.as_ref();
    let manifest = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let mut sections = Vec::new();
    for (lineno, line) in manifest.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let (_, file, source) = match (fields.next(), fields.next(), fields.next()) {
            (Some(i), Some(f), Some(s)) => (i, f, s),
            _ => {
                return Err(io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("{}:{}: malformed manifest line", MANIFEST_FILE, lineno + 1),
                ))
            }
        };
        let text = fs::read(dir.join(file))?;
        sections.push(SectionText::new(decode_lossy(&text), source));
    }
    Ok(sections)
}

fn read_entry<R: Read + Seek>(zip: &mut ZipArchive<R>, name: &str) -> io::Result<Option<Vec<u8>>> {
    let mut file = match zip.by_name(name) {
        Ok(file) => file,
        Err(ZipError::FileNotFound) => return Ok(None),
        Err(ZipError::Io(e)) => return Err(e),
        Err(e) => return Err(io::Error::new(io::ErrorKind::InvalidData, e.to_string())),
    };
    let mut buf = Vec::with_capacity(file.size() as usize);
    file.read_to_end(&mut buf)?;
    Ok(Some(buf))
}

fn attribute(tag: &BytesStart<'_>, name: &[u8]) -> Option<String> {
    tag.attributes()
        .flatten()
        .find(|a| a.key.local_name().as_ref() == name)
        .and_then(|a| a.unescape_value().ok().map(|v| v.into_owned()))
}

fn rootfile_path(container: &str) -> Option<String> {
    let mut reader = Reader::from_str(container);
    loop {
        match reader.read_event() {
            Ok(Event::Start(tag)) | Ok(Event::Empty(tag))
                if tag.local_name().as_ref() == b"rootfile" =>
            {
                if let Some(p) = attribute(&tag, b"full-path") {
                    return Some(p);
                }
            }
            Ok(Event::Eof) | Err(_) => return None,
            _ => {}
        }
    }
}

struct ManifestItem {
    href: String,
    media_type: String,
}

struct Package {
    title: Option<String>,
    manifest: HashMap<String, ManifestItem>,
    spine: Vec<String>,
}

fn parse_package(opf: &str) -> Result<Package, String> {
    let mut reader = Reader::from_str(opf);
    let mut manifest = HashMap::new();
    let mut spine = Vec::new();
    let mut title: Option<String> = None;
    let mut in_title = false;
    let mut saw_spine = false;
    loop {
        match reader.read_event() {
            Ok(Event::Start(tag)) | Ok(Event::Empty(tag)) => match tag.local_name().as_ref() {
                b"item" => {
                    let id = attribute(&tag, b"id");
                    let href = attribute(&tag, b"href");
                    if let (Some(id), Some(href)) = (id, href) {
                        let media_type = attribute(&tag, b"media-type").unwrap_or_default();
                        manifest.insert(id, ManifestItem { href, media_type });
                    }
                }
                b"itemref" => {
                    if let Some(idref) = attribute(&tag, b"idref") {
                        spine.push(idref);
                    }
                }
                b"spine" => saw_spine = true,
                b"title" if title.is_none() => in_title = true,
                _ => {}
            },
            Ok(Event::Text(text)) if in_title => {
                let value = text.unescape().map_err(|e| e.to_string())?;
                title = Some(value.trim().to_string());
            }
            Ok(Event::End(_)) => in_title = false,
            Ok(Event::Eof) => break,
            Err(e) => return Err(format!("XML error at byte {}: {e}", reader.buffer_position())),
            _ => {}
        }
    }
    if !saw_spine {
        return Err("no <spine> element".into());
    }
    Ok(Package { title, manifest, spine })
}

/// Joins `href` onto the package directory, dropping any fragment and
/// resolving `.`/`..` segments and percent escapes.
fn resolve_href(base: &str, href: &str) -> String {
    let href = href.split('#').next().unwrap_or("");
    let href = percent_decode(href);
    let joined = if href.starts_with('/') {
        href.trim_start_matches('/').to_string()
    } else {
        format!("{base}{href}")
    };
    let mut parts: Vec<&str> = Vec::new();
    for seg in joined.split('/') {
        match seg {
            "" | "." => {}
            ".." => {
                parts.pop();
            }
            s => parts.push(s),
        }
    }
    parts.join("/")
}

fn percent_decode(s: &str) -> String {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' && i + 2 < bytes.len() {
            let hex = std::str::from_utf8(&bytes[i + 1..i + 3]).ok();
            if let Some(v) = hex.and_then(|h| u8::from_str_radix(h, 16).ok()) {
                out.push(v);
                i += 3;
                continue;
            }
        }
        out.push(bytes[i]);
        i += 1;
    }
    String::from_utf8_lossy(&out).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;
    use zip::write::SimpleFileOptions;

    const CONTAINER: &str = r#"<?xml version="1.0"?>
<container version="1.0" xmlns="urn:oasis:names:tc:opendocument:xmlns:container">
  <rootfiles>
    <rootfile full-path="OEBPS/content.opf" media-type="application/oebps-package+xml"/>
  </rootfiles>
</container>"#;

    const OPF: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<package xmlns="http://www.idpf.org/2007/opf" version="2.0">
  <metadata xmlns:dc="http://purl.org/dc/elements/1.1/">
    <dc:title>The Mahabharata</dc:title>
  </metadata>
  <manifest>
    <item id="c2" href="text/ch%202.xhtml" media-type="application/xhtml+xml"/>
    <item id="c1" href="text/ch1.xhtml" media-type="application/xhtml+xml"/>
    <item id="css" href="style.css" media-type="text/css"/>
  </manifest>
  <spine>
    <itemref idref="c1"/>
    <itemref idref="css"/>
    <itemref idref="c2"/>
  </spine>
</package>"#;

    fn build_zip(entries: &[(&str, &str)]) -> Vec<u8> {
        let mut buf = Cursor::new(Vec::new());
        {
            let mut zip = zip::ZipWriter::new(&mut buf);
            for (name, body) in entries {
                zip.start_file(*name, SimpleFileOptions::default()).unwrap();
                zip.write_all(body.as_bytes()).unwrap();
            }
            zip.finish().unwrap();
        }
        buf.into_inner()
    }

    #[test]
    fn spine_order_and_non_xhtml_skipped() {
        let bytes = build_zip(&[
            ("mimetype", "application/epub+zip"),
            ("META-INF/container.xml", CONTAINER),
            ("OEBPS/content.opf", OPF),
            ("OEBPS/text/ch1.xhtml", "<html><body><p>Adi Parva</p></body></html>"),
            ("OEBPS/text/ch 2.xhtml", "<html><body><p>Sabha Parva</p></body></html>"),
            ("OEBPS/style.css", "p {}"),
        ]);
        let archive = read_epub(Cursor::new(bytes), Path::new("t.epub")).unwrap();
        assert_eq!(archive.title.as_deref(), Some("The Mahabharata"));
        let paths: Vec<_> = archive.content_docs().iter().map(|d| d.path.as_str()).collect();
        assert_eq!(paths, ["OEBPS/text/ch1.xhtml", "OEBPS/text/ch 2.xhtml"]);
        let sections = epub_to_sections(&archive);
        assert_eq!(sections[0].text, "Adi Parva\n");
        assert_eq!(sections[1].text, "Sabha Parva\n");
    }

    #[test]
    fn missing_container() {
        let bytes = build_zip(&[("mimetype", "application/epub+zip")]);
        let err = read_epub(Cursor::new(bytes), Path::new("x.epub")).unwrap_err();
        assert!(matches!(err, IngestError::MissingContainer { .. }), "{err:?}");
    }

    #[test]
    fn not_zip() {
        let err = read_epub(Cursor::new(b"just some text".to_vec()), Path::new("x.txt")).unwrap_err();
        assert!(matches!(err, IngestError::NotZip { ref path } if path == Path::new("x.txt")));
    }

    #[test]
    fn empty_spine() {
        let opf = r#"<package><manifest><item id="a" href="a.css" media-type="text/css"/></manifest>
            <spine><itemref idref="a"/></spine></package>"#;
        let bytes = build_zip(&[
            ("META-INF/container.xml", CONTAINER),
            ("OEBPS/content.opf", opf),
            ("OEBPS/a.css", ""),
        ]);
        let err = read_epub(Cursor::new(bytes), Path::new("x.epub")).unwrap_err();
        assert!(matches!(err, IngestError::EmptySpine { .. }), "{err:?}");
    }

    #[test]
    fn malformed_opf() {
        let bytes = build_zip(&[
            ("META-INF/container.xml", CONTAINER),
            ("OEBPS/content.opf", "<package><manifest></manifest></package>"),
        ]);
        let err = read_epub(Cursor::new(bytes), Path::new("x.epub")).unwrap_err();
        assert!(matches!(err, IngestError::MalformedOpf { .. }), "{err:?}");

        let opf = r#"<package><manifest/><spine><itemref idref="ghost"/></spine></package>"#;
        let bytes = build_zip(&[("META-INF/container.xml", CONTAINER), ("OEBPS/content.opf", opf)]);
        let err = read_epub(Cursor::new(bytes), Path::new("x.epub")).unwrap_err();
        assert!(matches!(err, IngestError::MalformedOpf { .. }), "{err:?}");
    }

    #[test]
    fn script_only_doc_gives_empty_section() {
        let opf = r#"<package><manifest><item id="a" href="a.xhtml" media-type="application/xhtml+xml"/></manifest>
            <spine><itemref idref="a"/></spine></package>"#;
        let bytes = build_zip(&[
            ("META-INF/container.xml", CONTAINER),
            ("OEBPS/content.opf", opf),
            ("OEBPS/a.xhtml", "<html><body><script>var x = '<p>';</script></body></html>"),
        ]);
        let archive = read_epub(Cursor::new(bytes), Path::new("x.epub")).unwrap();
        let sections = epub_to_sections(&archive);
        assert_eq!(sections.len(), 1);
        assert_eq!(sections[0].text, "");
    }

    #[test]
    fn href_resolution() {
        assert_eq!(resolve_href("OEBPS/", "text/a.xhtml#frag"), "OEBPS/text/a.xhtml");
        assert_eq!(resolve_href("OEBPS/text/", "../b.xhtml"), "OEBPS/b.xhtml");
        assert_eq!(resolve_href("", "./c%20d.xhtml"), "c d.xhtml");
        assert_eq!(percent_decode("100%"), "100%");
        assert_eq!(percent_decode("%4"), "%4");
    }

    #[test]
    fn sections_dump_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let sections = vec![SectionText::new("one\n", "a.xhtml"), SectionText::new("two", "b.xhtml")];
        write_sections(dir.path(), &sections).unwrap();
        assert_eq!(read_sections(dir.path()).unwrap(), sections);
    }
}
