#!/usr/bin/env python3
"""Write the HTTP cassettes under fixtures/tools/<tool>/http.jsonl.

The responses are hand-built in the shape of the real PubChem, ChEMBL,
Entrez, BLAST, Wikipedia and SearxNG JSON/XML replies so the test suite runs
without network access. Records for the two example drug candidates carry the
values shown in the worked agent example; everything else is illustrative.
"""

import argparse
import hashlib
import json
from pathlib import Path
from urllib.parse import quote

PUBCHEM = "https://pubchem.ncbi.nlm.nih.gov/rest/pug"
CHEMBL = "https://www.ebi.ac.uk/chembl/api/data"
EUTILS = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils"
BLAST = "https://blast.ncbi.nlm.nih.gov/blast/Blast.cgi"
WIKI = "https://en.wikipedia.org/w/rest.php/v1"
WEB = "http://127.0.0.1:8888/search"

CANDIDATE_A = "N#Cc1c(NC(=O)c2cc([N+](=O)[O-])ccc2N2CCOCC2)sc2c1CCCC2"
CANDIDATE_B = "O=C(C=Cc1ccccn1)c1ccccc1"
IMATINIB = "Cc1ccc(NC(=O)c2ccc(CN3CCN(C)CC3)cc2)cc1Nc1nccc(-c2cccnc2)n1"
UNKNOWN_SMILES = "CC(C)(C)C(C)(C)C(C)(C)C(C)(C)C(C)(C)C(C)(C)O"
PIK3CA_N_TERM = "MPPRPSSGELWGIHLMPPRILVECLLPNGMIVTLECLREATLITIKHELFKEARKYPLHQ"
BLAST_QUERY = "MALWMRLLPLLALLALWGPDPAAAFVNQHLCGSHLVEALYLVCGERGFFYTPKT"

CODONS = {
    "A": "GCC", "R": "CGG", "N": "AAC", "D": "GAC", "C": "TGC", "Q": "CAG", "E": "GAG", "G": "GGC",
    "H": "CAC", "I": "ATC", "L": "CTG", "K": "AAG", "M": "ATG", "F": "TTC", "P": "CCC", "S": "AGC",
    "T": "ACC", "W": "TGG", "Y": "TAC", "V": "GTG",
}


def enc(s):
    return quote(s, safe="-_.~")


def get(url, body, status=200, retry_after=None):
    e = {"key": "GET " + url, "status": status, "body": body if isinstance(body, str) else json.dumps(body)}
    if retry_after is not None:
        e["retry_after_s"] = retry_after
    return e


def post(url, form, body, status=200):
    key = "POST " + url + " sha256:" + hashlib.sha256(form.encode()).hexdigest()
    return {"key": key, "status": status, "body": body if isinstance(body, str) else json.dumps(body)}


def pubchem_props(cid, **props):
    return {"PropertyTable": {"Properties": [dict(CID=cid, **props)]}}


NOT_FOUND = {"Fault": {"Code": "PUGREST.NotFound", "Message": "No CID found"}}
DESC_PROPS = "/property/MolecularFormula,MolecularWeight,Charge,IUPACName,XLogP/JSON"


def smiles_to_description():
    out = []
    out.append(get(PUBCHEM + "/compound/smiles/" + enc(CANDIDATE_A) + DESC_PROPS, pubchem_props(
        3934361, MolecularFormula="C20H20N4O4S", MolecularWeight="412.5", Charge=0,
        IUPACName="N-(3-cyano-4,5,6,7-tetrahydro-1-benzothiophen-2-yl)-2-morpholin-4-yl-5-nitrobenzamide",
        XLogP=3.8)))
    out.append(get(PUBCHEM + "/compound/cid/3934361/synonyms/JSON", {"InformationList": {"Information": [{
        "CID": 3934361, "Synonym": ["MLS000335194", "CHEMBL1549645", "HMS2597A10", "HMS3379H10", "AKOS001044982",
                                    "SMR000249952", "SR-01000056848", "SR-01000056848-1", "Z27367728"]}]}}))
    out.append(get(PUBCHEM + "/compound/smiles/" + enc(CANDIDATE_B) + DESC_PROPS, pubchem_props(
        219207, MolecularFormula="C14H11NO", MolecularWeight="209.24", Charge=0,
        IUPACName="1-phenyl-3-pyridin-2-ylprop-2-en-1-one", XLogP=2.7)))
    out.append(get(PUBCHEM + "/compound/cid/219207/synonyms/JSON", {"InformationList": {"Information": [{
        "CID": 219207, "Synonym": ["3-(2-PYRIDYL)-ACRYLOPHENONE", "MLS002637493", "azachalcone", "CHEMBL1717486",
                                   "DTXSID601279307", "HMS3079I05", "SMR001547031",
                                   "1-Phenyl-3-(2-pyridinyl)-2-propen-1-one"]}]}}))
    out.append(get(PUBCHEM + "/compound/smiles/" + enc(UNKNOWN_SMILES) + DESC_PROPS, NOT_FOUND, status=404))
    return out


def smiles_therapy():
    base = CHEMBL
    return [
        get(base + "/molecule.json?molecule_structures__canonical_smiles__flexmatch=" + enc(IMATINIB) + "&limit=1",
            {"molecules": [{"molecule_chembl_id": "CHEMBL941", "pref_name": "IMATINIB", "max_phase": "4.0",
                            "atc_classifications": ["L01EA01"]}], "page_meta": {"total_count": 1}}),
        get(base + "/mechanism.json?molecule_chembl_id=CHEMBL941&limit=20", {"mechanisms": [
            {"mechanism_of_action": "Bcr/Abl fusion protein inhibitor", "action_type": "INHIBITOR",
             "target_chembl_id": "CHEMBL2096618"},
            {"mechanism_of_action": "Stem cell growth factor receptor inhibitor", "action_type": "INHIBITOR",
             "target_chembl_id": "CHEMBL1936"},
            {"mechanism_of_action": "Platelet-derived growth factor receptor inhibitor", "action_type": "INHIBITOR",
             "target_chembl_id": "CHEMBL2095189"}]}),
        get(base + "/drug_indication.json?molecule_chembl_id=CHEMBL941&limit=20", {"drug_indications": [
            {"mesh_heading": "Leukemia, Myelogenous, Chronic, BCR-ABL Positive", "max_phase_for_ind": "4.0"},
            {"mesh_heading": "Gastrointestinal Stromal Tumors", "max_phase_for_ind": "4.0"}]}),
        get(base + "/molecule.json?molecule_structures__canonical_smiles__flexmatch=" + enc(UNKNOWN_SMILES) +
            "&limit=1", {"molecules": [], "page_meta": {"total_count": 0}}),
    ]


def wikipedia_search():
    url = WIKI + "/search/page?q=" + enc("alpelisib") + "&limit=3"
    pages = {"pages": [
        {"id": 53611264, "key": "Alpelisib", "title": "Alpelisib",
         "excerpt": "<span class=\"searchmatch\">Alpelisib</span>, sold under the brand name Piqray, is a medication "
                    "used to treat certain types of breast cancer.",
         "description": "Chemical compound"},
        {"id": 4088851, "key": "PIK3CA", "title": "PIK3CA",
         "excerpt": "inhibitors such as <span class=\"searchmatch\">alpelisib</span> target the p110 alpha subunit",
         "description": "Protein-coding gene in the species Homo sapiens"},
    ]}
    limited = WIKI + "/search/page?q=" + enc("rate limited query") + "&limit=3"
    return [
        get(url, pages),
        get(limited, {"httpCode": 429, "httpReason": "Too Many Requests"}, status=429, retry_after=2),
        get(limited, {"pages": [{"id": 1, "key": "Rate_limiting", "title": "Rate limiting",
                                 "excerpt": "controls the rate of requests", "description": "Networking technique"}]}),
    ]


def pubmed_search():
    term = "PIK3CA ovarian cancer"
    ids = ["19029981", "35112233"]
    esummary = {"header": {"type": "esummary"}, "result": {"uids": ids,
        "19029981": {"uid": "19029981", "title": "Frequent activating mutations of PIK3CA in ovarian clear cell "
                     "carcinoma.", "authors": [{"name": "Kuo KT"}, {"name": "Mao TL"}, {"name": "Jones S"},
                                               {"name": "Veras E"}, {"name": "Ayhan A"}, {"name": "Wang TL"},
                                               {"name": "Glas R"}],
                     "fulljournalname": "The American journal of pathology", "pubdate": "2009 May"},
        "35112233": {"uid": "35112233", "title": "PI3K pathway inhibitors in gynecologic cancers.",
                     "authors": [{"name": "Doe J"}], "source": "Gynecol Oncol", "pubdate": "2022"}}}
    efetch = (
        "<?xml version=\"1.0\" ?>\n<PubmedArticleSet>\n<PubmedArticle><MedlineCitation>"
        "<PMID Version=\"1\">19029981</PMID><Article><Abstract>"
        "<AbstractText Label=\"BACKGROUND\">Ovarian clear cell carcinoma is an aggressive subtype.</AbstractText>"
        "<AbstractText Label=\"RESULTS\">Activating PIK3CA mutations were found in 33% of tumors &amp; cell "
        "lines.</AbstractText></Abstract></Article></MedlineCitation></PubmedArticle>\n"
        "<PubmedArticle><MedlineCitation><PMID Version=\"1\">35112233</PMID><Article><Abstract>"
        "<AbstractText>Inhibitors of <i>PI3K</i> signalling are reviewed.</AbstractText>"
        "</Abstract></Article></MedlineCitation></PubmedArticle>\n</PubmedArticleSet>\n")
    return [
        get(EUTILS + "/esearch.fcgi?db=pubmed&retmode=json&retmax=3&term=" + enc(term),
            {"esearchresult": {"count": "2", "retmax": "2", "idlist": ids}}),
        get(EUTILS + "/esummary.fcgi?db=pubmed&retmode=json&id=" + ",".join(ids), esummary),
        get(EUTILS + "/efetch.fcgi?db=pubmed&retmode=xml&rettype=abstract&id=" + ",".join(ids), efetch),
    ]


def web_search():
    q = "blood-brain barrier permeability prediction"
    return [get(WEB + "?q=" + enc(q) + "&format=json", {"query": q, "results": [
        {"title": "Blood-brain barrier permeability models", "url": "https://example.org/bbb-models",
         "content": "An overview of computational   models for BBB penetration."},
        {"title": "B3DB dataset", "url": "https://example.org/b3db", "content": "A curated BBB permeability set."},
        {"title": "CNS drug design", "url": "https://example.org/cns", "content": "Design rules for CNS drugs."},
        {"title": "Fourth result", "url": "https://example.org/4", "content": "Not shown with k = 3."},
    ]})]


def html_fetch():
    page = "<!doctype html><html><head><title>Example</title></head><body><p>Example page.</p></body></html>"
    big = "<html><body>" + "x" * 30000 + "</body></html>"
    return [
        get("https://example.org/", page),
        get("https://example.org/missing", "<html>not found</html>", status=404),
        get("https://example.org/large", big),
    ]


def molecule_tool():
    return [get(PUBCHEM + "/compound/name/aspirin/property/MolecularFormula,MolecularWeight,CanonicalSMILES,InChI,"
                "InChIKey,IUPACName/JSON", pubchem_props(
                    2244, MolecularFormula="C9H8O4", MolecularWeight="180.16", CanonicalSMILES="CC(=O)OC1=CC=CC=C1C(=O)O",
                    InChI="InChI=1S/C9H8O4/c1-6(10)13-8-5-3-2-4-7(8)9(11)12/h2-5H,1H3,(H,11,12)",
                    InChIKey="BSYNRYMUTXBXSQ-UHFFFAOYSA-N", IUPACName="2-acetyloxybenzoic acid")),
            get(PUBCHEM + "/compound/name/" + enc("no such compound") + "/property/MolecularFormula,MolecularWeight,"
                "CanonicalSMILES,InChI,InChIKey,IUPACName/JSON", NOT_FOUND, status=404)]


def molecule_convert():
    inchi = "InChI=1S/C2H6O/c1-2-3/h3H,2H2,1H3"
    key = "LFQSCWFLJHTTHZ-UHFFFAOYSA-N"
    return [
        get(PUBCHEM + "/compound/smiles/CCO/property/InChI/JSON", pubchem_props(702, InChI=inchi)),
        get(PUBCHEM + "/compound/smiles/CCO/property/InChIKey/JSON", pubchem_props(702, InChIKey=key)),
        post(PUBCHEM + "/compound/inchi/property/CanonicalSMILES/JSON", "inchi=" + enc(inchi),
             json.dumps(pubchem_props(702, CanonicalSMILES="CCO"))),
        get(PUBCHEM + "/compound/inchikey/" + key + "/property/CanonicalSMILES/JSON",
            pubchem_props(702, ConnectivitySMILES="CCO")),
    ]


def gene_sequence():
    term = "PIK3CA[Gene Name] AND Homo sapiens[Organism] AND refseq[filter] AND mRNA[Filter]"
    cds = "".join(CODONS[a] for a in PIK3CA_N_TERM) + "TGA"
    # A short upstream ORF and a UTR, so the longest-ORF rule matters.
    mrna = "GCCATGGCCTAAGGCGCC" + cds + "GCTTAGCAATAAAGCC"
    fasta = ">NM_006218.4 Homo sapiens phosphatidylinositol-4,5-bisphosphate 3-kinase catalytic subunit alpha " \
            "(PIK3CA), mRNA (abridged)\n" + "\n".join(mrna[i:i + 70] for i in range(0, len(mrna), 70)) + "\n"
    missing = "NOTAGENE[Gene Name] AND Homo sapiens[Organism] AND refseq[filter] AND mRNA[Filter]"
    return [
        get(EUTILS + "/esearch.fcgi?db=nuccore&retmode=json&retmax=1&term=" + enc(term),
            {"esearchresult": {"count": "1", "idlist": ["1953265"]}}),
        get(EUTILS + "/efetch.fcgi?db=nuccore&rettype=fasta&retmode=text&id=1953265", fasta),
        get(EUTILS + "/esearch.fcgi?db=nuccore&retmode=json&retmax=1&term=" + enc(missing),
            {"esearchresult": {"count": "0", "idlist": []}}),
    ]


def gene_description():
    term = "PIK3CA[sym] AND Homo sapiens[orgn]"
    return [
        get(EUTILS + "/esearch.fcgi?db=gene&retmode=json&retmax=1&term=" + enc(term),
            {"esearchresult": {"count": "1", "idlist": ["5290"]}}),
        get(EUTILS + "/esummary.fcgi?db=gene&retmode=json&id=5290", {"result": {"uids": ["5290"], "5290": {
            "uid": "5290", "name": "PIK3CA",
            "description": "phosphatidylinositol-4,5-bisphosphate 3-kinase catalytic subunit alpha",
            "nomenclaturesymbol": "PIK3CA",
            "nomenclaturename": "phosphatidylinositol-4,5-bisphosphate 3-kinase catalytic subunit alpha",
            "organism": {"scientificname": "Homo sapiens", "commonname": "human", "taxid": 9606},
            "summary": "Phosphatidylinositol 3-kinase is composed of an 85 kDa regulatory subunit and a 110 kDa "
                       "catalytic subunit. The protein encoded by this gene represents the catalytic subunit. "
                       "Somatic mutations in this gene are frequent in several cancers."}}}),
    ]


def blast_entries(query, rid, hits):
    form = "CMD=Put&PROGRAM=blastp&DATABASE=swissprot&HITLIST_SIZE=5&QUERY=" + enc(query)
    info = BLAST + "?CMD=Get&FORMAT_OBJECT=SearchInfo&RID=" + rid
    result = {"BlastOutput2": [{"report": {"program": "blastp", "results": {"search": {"hits": hits}}}}]}
    return [
        post(BLAST, form, "<!--QBlastInfoBegin\n    RID = " + rid + "\n    RTOE = 12\nQBlastInfoEnd\n-->"),
        get(info, "<!--QBlastInfoBegin\n\tStatus=WAITING\nQBlastInfoEnd\n-->"),
        get(info, "<!--QBlastInfoBegin\n\tStatus=READY\nQBlastInfoEnd\n-->\n<!--QBlastInfoBegin\n"
                  "\tThereAreHits=yes\nQBlastInfoEnd\n-->"),
        get(BLAST + "?CMD=Get&FORMAT_TYPE=JSON2_S&RID=" + rid, result),
    ]


INSULIN_HITS = [
    {"num": 1, "description": [{"id": "sp|P01308.1|", "accession": "P01308",
                                "title": "RecName: Full=Insulin; Contains: RecName: Full=Insulin B chain [Homo sapiens]",
                                "sciname": "Homo sapiens", "taxid": 9606}],
     "hsps": [{"identity": 54, "align_len": 54, "evalue": 3.1e-35}]},
    {"num": 2, "description": [{"id": "sp|P01315.2|", "accession": "P01315",
                                "title": "RecName: Full=Insulin; Flags: Precursor [Sus scrofa]",
                                "sciname": "Sus scrofa", "taxid": 9823}],
     "hsps": [{"identity": 47, "align_len": 54, "evalue": 2.0e-28}]},
]


def blastp():
    return blast_entries(BLAST_QUERY, "TXBENCH01", INSULIN_HITS)


def protein_description():
    return [
        get(EUTILS + "/esearch.fcgi?db=protein&retmode=json&retmax=1&term=" + enc("insulin AND refseq[filter]"),
            {"esearchresult": {"count": "1", "idlist": ["386828"]}}),
        get(EUTILS + "/esummary.fcgi?db=protein&retmode=json&id=386828", {"result": {"uids": ["386828"], "386828": {
            "uid": "386828", "caption": "NP_000198", "accessionversion": "NP_000198.1",
            "title": "insulin preproprotein [Homo sapiens]", "organism": "Homo sapiens"}}}),
        # Sequence queries are identified through BLASTP first.
        get(EUTILS + "/esummary.fcgi?db=protein&retmode=json&id=P01308", {"result": {"uids": ["124617"], "124617": {
            "uid": "124617", "caption": "P01308", "accessionversion": "P01308.1",
            "title": "RecName: Full=Insulin; Contains: RecName: Full=Insulin B chain", "organism": "Homo sapiens"}}}),
    ] + blast_entries(BLAST_QUERY + "N", "TXBENCH02", INSULIN_HITS)


CASSETTES = {
    "smiles_to_description": smiles_to_description,
    "smiles_therapy": smiles_therapy,
    "wikipedia_search": wikipedia_search,
    "pubmed_search": pubmed_search,
    "web_search": web_search,
    "html_fetch": html_fetch,
    "molecule_tool": molecule_tool,
    "molecule_convert": molecule_convert,
    "gene_sequence": gene_sequence,
    "gene_description": gene_description,
    "blastp": blastp,
    "protein_description": protein_description,
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "fixtures" / "tools"))
    args = ap.parse_args()
    root = Path(args.out)
    for name, fn in CASSETTES.items():
        d = root / name
        d.mkdir(parents=True, exist_ok=True)
        with open(d / "http.jsonl", "w", encoding="utf-8", newline="\n") as f:
            for e in fn():
                f.write(json.dumps(e, ensure_ascii=False) + "\n")
        print(name)


if __name__ == "__main__":
    main()
