"""Namespace IRIs used throughout the toolkit."""

from __future__ import annotations

from .terms import RDF, XSD, Iri

RDFS = "http://www.w3.org/2000/01/rdf-schema#"
OWL = "http://www.w3.org/2002/07/owl#"
SKOS = "http://www.w3.org/2004/02/skos/core#"
BFO = "http://purl.obolibrary.org/obo/bfo/"
CCO = "http://www.ontologyrepository.com/CommonCoreOntologies/"
FORGE = "https://w3id.org/cco-forge/vocab#"
UNIT = "https://w3id.org/cco-forge/unit/"

DEFAULT_PREFIXES = {
    "rdf": RDF,
    "rdfs": RDFS,
    "owl": OWL,
    "skos": SKOS,
    "xsd": XSD,
    "bfo": BFO,
    "cco": CCO,
    "forge": FORGE,
    "unit": UNIT,
}

RDF_TYPE = Iri(RDF + "type")
RDFS_LABEL = Iri(RDFS + "label")
RDFS_COMMENT = Iri(RDFS + "comment")
RDFS_SUBCLASS_OF = Iri(RDFS + "subClassOf")
RDFS_SUBPROPERTY_OF = Iri(RDFS + "subPropertyOf")
OWL_CLASS = Iri(OWL + "Class")
OWL_OBJECT_PROPERTY = Iri(OWL + "ObjectProperty")
OWL_ANNOTATION_PROPERTY = Iri(OWL + "AnnotationProperty")
OWL_NAMED_INDIVIDUAL = Iri(OWL + "NamedIndividual")
OWL_ONTOLOGY = Iri(OWL + "Ontology")
SKOS_DEFINITION = Iri(SKOS + "definition")


def expand_curie(text: str, prefixes: dict[str, str] | None = None) -> Iri:
    """Turn ``cco:Truck`` or ``<http://...>`` or a bare absolute IRI into an Iri."""
    text = text.strip()
    if text.startswith("<") and text.endswith(">"):
        return Iri(text[1:-1])
    if text == "a":
        return RDF_TYPE
    table = DEFAULT_PREFIXES if prefixes is None else prefixes
    head, sep, tail = text.partition(":")
    if sep and head in table and not tail.startswith("//"):
        return Iri(table[head] + tail)
    return Iri(text)


def shorten(iri: Iri, prefixes: dict[str, str] | None = None) -> str:
    table = DEFAULT_PREFIXES if prefixes is None else prefixes
    best = None
    for prefix, ns in table.items():
        if iri.value.startswith(ns) and (best is None or len(ns) > len(table[best])):
            best = prefix
    if best is None:
        return iri.value
    return f"{best}:{iri.value[len(table[best]):]}"
